use clap::Parser;

fn main() {
    let cli = match critlog::Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { critlog::EXIT_CONFIG } else { critlog::EXIT_OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(critlog::run(&cli));
}
