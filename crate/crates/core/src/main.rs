fn main() {
    let code = zigzag_core::cli::main_with_env();
    std::process::exit(code);
}
