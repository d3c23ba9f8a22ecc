fn main() {
    std::process::exit(speedkit::cli::main_from_env());
}
