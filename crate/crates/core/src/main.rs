use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polyvem::experiments::{run_experiment, write_tables, ExperimentConfig};
use polyvem::mesh::{self, check_regularity, compute_geometry, mesh_size, MeshFamily, DEFAULT_RHO};
use polyvem::Error;

#[derive(Parser)]
#[command(
    name = "polyvem",
    version,
    about = "Divergence-preserving VEM solver for resistive MHD on polygonal meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file and write its CSVs.
    Run {
        config: PathBuf,
        /// Output directory (overrides `[output] dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Print a regularity report for a mesh file.
    Check {
        mesh: PathBuf,
        /// Flag cells whose shortest edge is below `rho` times the diameter.
        #[arg(long, default_value_t = DEFAULT_RHO)]
        rho: f64,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Generate a mesh of [-1, 1]^2 at refinement level n.
    Gen {
        /// triangular, perturbed_quad or voronoi
        family: MeshFamily,
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config_error() {
        2
    } else if e.is_solver_error() {
        3
    } else {
        1
    }
}

fn execute(cli: Cli) -> polyvem::Result<()> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let cfg = ExperimentConfig::read(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let tables = run_experiment(&cfg, jobs)?;
            write_tables(&tables, &dir)?;
            for t in &tables {
                println!("wrote {} ({} rows)", dir.join(&t.name).display(), t.rows.len());
            }
        }
        Command::Mesh {
            command:
                MeshCommand::Gen {
                    family,
                    n,
                    seed,
                    output,
                },
        } => {
            let m = family.generate(n, seed)?;
            mesh::io::write(&m, &output)?;
            println!(
                "wrote {}: {} vertices, {} edges, {} cells",
                output.display(),
                m.num_vertices(),
                m.num_edges(),
                m.num_cells()
            );
        }
        Command::Check { mesh: path, rho } => {
            let m = mesh::io::read(&path)?;
            let g = compute_geometry(&m)?;
            let report = check_regularity(&m, &g);
            let flagged = report.flagged(rho);
            println!("mesh            {}", path.display());
            println!("vertices        {}", m.num_vertices());
            println!("edges           {}", m.num_edges());
            println!("cells           {}", m.num_cells());
            println!("area            {:.12}", m.total_area());
            println!("h               {:.6e}", mesh_size(&g));
            println!("max vertices    {}", report.max_vertices);
            println!("min |E|/h_P     {:.6e}", report.min_ratio());
            println!("flagged (rho={rho}) {}", flagged.len());
            for c in flagged.iter().take(20) {
                println!("  cell {c}: |E|/h_P = {:.3e}", report.edge_ratio[*c]);
            }
            println!(
                "star-shaped     {}",
                if report.all_star_shaped() { "all" } else { "NO" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
