use clap::Parser;

use momtomo::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            if let Some(r) = &outcome.report {
                if let (Some(f), Some(t)) = (r.rel_l2_f, r.rel_l2_tensor) {
                    println!("relative L2 error: f {f:.4e}, F {t:.4e}");
                }
                if let Some(ratio) = r.ratio {
                    println!("stability ratio {ratio:.4e}");
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
