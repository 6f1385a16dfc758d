use std::io::Write;

fn main() {
    let res = liveness_cli::run(std::env::args_os());
    print!("{}", res.stdout);
    eprint!("{}", res.stderr);
    std::io::stdout().flush().ok();
    std::process::exit(res.code);
}
