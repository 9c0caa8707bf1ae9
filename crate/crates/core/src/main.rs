fn main() {
    std::process::exit(singprop::cli::run(std::env::args_os()));
}
