fn main() {
    std::process::exit(lopcoint_cli::app::run(std::env::args_os()));
}
