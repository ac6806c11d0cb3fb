use std::process::ExitCode;

use clap::Parser;
use geotomo_cli::{emit_report, execute, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    let result = execute(&args).and_then(|(cfg, reports)| {
        emit_report(&cfg, &reports, args.format, args.out.as_deref())?;
        Ok(reports)
    });
    let reports = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let passed = reports.iter().filter(|r| r.pass).count();
    let errors = reports.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "{}: {passed}/{} reports pass, {errors} evaluation errors",
        args.suite,
        reports.len()
    );
    ExitCode::SUCCESS
}
