fn main() -> std::process::ExitCode {
    mmfsec_cli::main_entry()
}
