use std::io::Write;
use std::sync::Arc;

use shiftequiv::cli::execute;
use shiftequiv::search::ProgressSink;

fn main() {
    let progress: ProgressSink = Arc::new(|ev| {
        if let Ok(line) = serde_json::to_string(ev) {
            let _ = writeln!(std::io::stderr(), "{line}");
        }
    });
    let ex = execute(std::env::args_os(), Some(progress));
    print!("{}", ex.stdout);
    eprint!("{}", ex.stderr);
    std::process::exit(ex.code);
}
