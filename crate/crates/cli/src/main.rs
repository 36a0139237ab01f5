use crosstl::backend::Registry;
use crosstl_cli::{run, Io};

fn main() {
    let registry = Registry::with_builtins();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = run(std::env::args_os(), &registry, &mut Io { out: &mut out, err: &mut err });
    std::process::exit(code);
}
