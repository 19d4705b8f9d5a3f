use std::io::{self, Write};
use std::process::ExitCode;

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let code = tempograph::cli::run(std::env::args_os(), &mut out);
    let _ = out.flush();
    ExitCode::from(code.clamp(0, 255) as u8)
}
