use std::path::PathBuf;
use std::process::Command;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rrlab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn rrlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rrlab")).args(args).output().unwrap()
}

fn without_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("# timestamp: ")).collect::<Vec<_>>().join("\n")
}

#[test]
fn invalid_scenario_exits_2_without_output() {
    let dir = scratch_dir("invalid");
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "scenario = transmogrify\n").unwrap();
    let out_dir = dir.join("out");
    let out = rrlab(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn missing_config_exits_2() {
    assert_eq!(rrlab(&["run", "/nonexistent/rrlab.cfg"]).status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical_except_the_timestamp() {
    let dir = scratch_dir("determinism");
    let cfg = dir.join("coercivity.cfg");
    std::fs::write(&cfg, "scenario = coercivity\ndimension = 1\nnx = 8\nn_steps = 8\nsamples = 5\n").unwrap();
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.join(run);
        let out = rrlab(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", "11"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(std::fs::read_to_string(out_dir.join("coercivity.csv")).unwrap());
    }
    assert_eq!(without_timestamp(&texts[0]), without_timestamp(&texts[1]));
    assert!(texts[0].contains("# seed: 11"));
    assert!(texts[0].contains("# config: seed=11"));
}

#[test]
fn config_echo_reruns_the_scenario() {
    let dir = scratch_dir("echo");
    let cfg = dir.join("spectrum.cfg");
    std::fs::write(&cfg, "scenario = spectrum\nnx = 4\nny = 4\nn_steps = 3\ns_list = 2\n").unwrap();
    let out = rrlab(&["run", cfg.to_str().unwrap(), "--out", dir.join("a").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let first = std::fs::read_to_string(dir.join("a/spectrum.csv")).unwrap();
    let echo: String = first
        .lines()
        .filter_map(|l| l.strip_prefix("# config: "))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg2 = dir.join("echo.cfg");
    std::fs::write(&cfg2, echo).unwrap();
    let out = rrlab(&["run", cfg2.to_str().unwrap(), "--out", dir.join("b").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let second = std::fs::read_to_string(dir.join("b/spectrum.csv")).unwrap();
    assert_eq!(without_timestamp(&first), without_timestamp(&second));
}

#[test]
fn iteration_cap_exits_4_with_report() {
    let dir = scratch_dir("cap");
    let cfg = dir.join("cap.cfg");
    std::fs::write(&cfg, "scenario = converge\nnx = 4\nny = 4\nn_steps = 3\nmax_iter = 2\n").unwrap();
    let out = rrlab(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let text = std::fs::read_to_string(dir.join("converge.csv")).unwrap();
    assert!(text.contains("# status: max_iter"));
    assert!(text.contains("n,increment_h,err_x1,err_x2,gap1,gap2,sp_residual"));
}
