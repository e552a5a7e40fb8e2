fn main() -> std::process::ExitCode {
    veridict::cli::run(std::env::args_os())
}
