fn main() {
    let status = incube_cli::run(std::env::args_os());
    std::process::exit(status.code());
}
