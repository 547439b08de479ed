fn main() {
    std::process::exit(normetric::cli_main(std::env::args_os()));
}
