use std::path::Path;
use std::process::{Command, Output};

fn polyvem(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvem"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generated_mesh_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let gen = polyvem(&["mesh", "gen", "triangular", "4", "-o", "tri.mesh"], dir.path());
    assert!(gen.status.success(), "{:?}", gen);
    assert!(dir.path().join("tri.mesh").exists());

    let check = polyvem(&["check", "tri.mesh"], dir.path());
    assert!(check.status.success());
    let out = stdout(&check);
    assert!(out.contains("cells           32"), "{out}");
    assert!(out.contains("vertices        25"));
    assert!(out.contains("star-shaped     all"));
    assert!(out.contains("area            4.000000000000"));
}

#[test]
fn voronoi_seed_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.mesh", "b.mesh"] {
        assert!(
            polyvem(&["mesh", "gen", "voronoi", "5", "--seed", "9", "-o", name], dir.path())
                .status
                .success()
        );
    }
    let a = std::fs::read(dir.path().join("a.mesh")).unwrap();
    let b = std::fs::read(dir.path().join("b.mesh")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("conv.ini"),
        "[experiment]\nkind = convergence\n[mesh]\nfamilies = triangular\nlevels = 2, 4\n\
         [scheme]\nvariants = E\nfinal_time = 0.05\n[output]\ndir = results\n",
    )
    .unwrap();
    let run = polyvem(&["run", "conv.ini", "--jobs", "2"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = std::fs::read_to_string(dir.path().join("results/convergence.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "# polyvem-mhd csv v1");
    assert!(lines[1].starts_with("family,variant,level,h,dt"));
    assert_eq!(lines.len(), 4);
    assert!(dir.path().join("results/convergence_eoc.csv").exists());

    let elsewhere = polyvem(&["run", "conv.ini", "--out", "other"], dir.path());
    assert!(elsewhere.status.success());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("other/convergence.csv")).unwrap(),
        table
    );
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.ini"),
        "[experiment]\nkind = convergence\n[scheme]\nthetta = 0.5\n",
    )
    .unwrap();
    let run = polyvem(&["run", "bad.ini"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).starts_with("error: "));

    let jobs = polyvem(&["run", "bad.ini", "--jobs", "0"], dir.path());
    assert_eq!(jobs.status.code(), Some(2));
}

#[test]
fn other_failures_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = polyvem(&["check", "missing.mesh"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    std::fs::write(dir.path().join("broken.mesh"), "not a mesh\n").unwrap();
    let broken = polyvem(&["check", "broken.mesh"], dir.path());
    assert_eq!(broken.status.code(), Some(1));
}
