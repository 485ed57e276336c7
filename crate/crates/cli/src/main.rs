fn main() {
    let code = claimlab_cli::run(std::env::args_os());
    std::process::exit(code);
}
