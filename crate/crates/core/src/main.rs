fn main() {
    std::process::exit(rattoep::cli::run(std::env::args_os()));
}
