fn main() {
    std::process::exit(terasense::cli::run(std::env::args_os()));
}
