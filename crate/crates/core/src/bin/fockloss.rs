fn main() {
    std::process::exit(fockloss::cli::run(std::env::args_os()));
}
