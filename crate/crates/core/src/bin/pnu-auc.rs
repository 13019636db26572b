fn main() {
    std::process::exit(pnu_auc::cli::main_with_args(std::env::args_os()));
}
