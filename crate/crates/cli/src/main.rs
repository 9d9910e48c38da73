use std::process::ExitCode;

fn main() -> ExitCode {
    let inv = match fdmimo_cli::parse_args(std::env::args().skip(1)) {
        Ok(Some(inv)) => inv,
        Ok(None) => {
            println!("{}", fdmimo_cli::USAGE);
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}\n\n{}", fdmimo_cli::USAGE);
            return ExitCode::from(2);
        }
    };
    match fdmimo_cli::run(&inv.config, &inv.out) {
        Ok(out) => {
            println!("wrote {}", out.csv.display());
            println!("wrote {}", out.manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
