fn main() {
    let code = kinsmooth::cli_runner::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
