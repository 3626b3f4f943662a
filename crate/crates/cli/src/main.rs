fn main() {
    std::process::exit(robustmd::app::run(std::env::args_os()));
}
