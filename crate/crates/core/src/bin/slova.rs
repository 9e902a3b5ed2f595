fn main() {
    std::process::exit(slova::cli::run(std::env::args_os()));
}
