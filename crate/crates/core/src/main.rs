fn main() -> std::process::ExitCode {
    qperiod::cli::main()
}
