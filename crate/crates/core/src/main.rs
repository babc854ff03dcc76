fn main() -> std::process::ExitCode {
    linsmr::cli::main()
}
