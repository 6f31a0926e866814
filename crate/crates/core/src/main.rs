fn main() {
    std::process::exit(dqopt::cli::main_exit_code());
}
