fn main() {
    let out = peerdx::cli::run(std::env::args_os().skip(1));
    print!("{}", out.stdout);
    std::process::exit(out.code);
}
