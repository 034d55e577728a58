fn main() {
    std::process::exit(dmp_avoid::cli::run(std::env::args_os()));
}
