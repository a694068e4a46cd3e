fn main() -> std::process::ExitCode {
    rxtropic_server::cli::run(std::env::args_os())
}
