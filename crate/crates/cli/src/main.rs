use std::io::Write;

fn main() {
    let (code, out) = nkgeom_cli::run(std::env::args());
    if code == 2 {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
    std::io::stdout().flush().ok();
    std::process::exit(code);
}
