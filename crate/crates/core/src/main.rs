fn main() {
    std::process::exit(trackbox::cli::run(std::env::args_os()));
}
