fn main() {
    let code = shaken_trap_cli::main_with(std::env::args_os(), std::env::vars());
    std::process::exit(code);
}
