use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    bospec::cli::configure_threads();
    ExitCode::from(bospec::cli::run_from_args(std::env::args_os()))
}
