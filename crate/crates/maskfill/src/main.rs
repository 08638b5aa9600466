fn main() {
    std::process::exit(maskfill::cli::run(std::env::args_os()));
}
