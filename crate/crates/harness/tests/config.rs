use savark_harness::config::parse_list;
use savark_harness::{HarnessError, RunConfig, SnapshotFormat};

fn parse(text: &str) -> Result<RunConfig, HarnessError> {
    RunConfig::parse(text)
}

fn config_err(text: &str) -> String {
    match parse(text) {
        Err(e @ HarnessError::Config(_)) => {
            assert_eq!(e.exit_code(), 2);
            e.to_string()
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn sections_and_defaults() {
    let cfg = parse(
        "[model]\nkind = ch\nepsilon = 0.01\n[scheme]\nname = diark_2_2_2\ngamma = 0.7886751345948129\n\
         [time]\ndt = 1e-3\nt_final = 1.0\n",
    )
    .unwrap();
    assert_eq!(cfg.model.kind, "ch");
    assert_eq!(cfg.model.epsilon, 0.01);
    assert_eq!(cfg.model.initial, "ch_cos");
    assert_eq!(cfg.scheme.gamma, Some(0.7886751345948129));
    assert_eq!((cfg.grid.nx, cfg.grid.ny), (128, 128));
    assert_eq!((cfg.grid.x_min, cfg.grid.x_max), (0.0, 1.0));
    assert_eq!(cfg.time.snapshot_times, vec![0.0, 1.0]);
    assert_eq!(cfg.output.format, SnapshotFormat::Savf);
    assert!(cfg.model.c > 0.0 && cfg.model.kappa >= 0.0);
}

#[test]
fn dotted_keys_outside_sections() {
    let cfg = parse("model.kind=ch\nmodel.epsilon=0.02\nscheme.name=diark_2_3_3\ntime.dt=1e-3\ntime.t_final=1.0\ngrid.n=32\n")
        .unwrap();
    assert_eq!(cfg.model.epsilon, 0.02);
    assert_eq!(cfg.scheme.name, "diark_2_3_3");
    assert_eq!((cfg.grid.nx, cfg.grid.ny), (32, 32));
}

#[test]
fn mbe_defaults_to_two_pi_domain() {
    let cfg = parse("[model]\nkind = mbe\n[time]\ndt = 5e-3\nt_final = 30\n").unwrap();
    assert_eq!(cfg.model.initial, "mbe_two_mode");
    assert!((cfg.grid.x_max - 2.0 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn manufactured_requires_ch() {
    let msg = config_err("[model]\nkind = ac\ninitial = manufactured_ch\n[time]\ndt = 1e-3\nt_final = 1\n");
    assert!(msg.contains("manufactured_ch"), "{msg}");
}

#[test]
fn rejects_bad_input() {
    let base = "[time]\ndt = 1e-3\nt_final = 1\n";
    config_err(base);
    config_err(&format!("[model]\nkind = heat\n{base}"));
    config_err(&format!("[model]\nkind = ac\nepsilon = abc\n{base}"));
    config_err(&format!("[model]\nkind = ac\ncolour = red\n{base}"));
    config_err(&format!("[model]\nkind = ac\n[solver]\nx = 1\n{base}"));
    config_err(&format!("[model]\nkind = ac\ninitial = blob\n{base}"));
    config_err(&format!("[model]\nkind = ac\n[scheme]\nname = rk4\n{base}"));
    config_err(&format!("[model]\nkind = ac\n[grid]\nn = 15\n{base}"));
    config_err("[model]\nkind = ac\n[time]\ndt = 0\nt_final = 1\n");
    config_err("[model]\nkind = ac\n[time]\ndt = 1e-3\nt_final = -1\n");
    config_err("[model]\nkind = ac\n[time]\nt_final = 1\n");
    config_err("[model]\nkind = ac\n[time]\ndt = 1e-3\n");
    config_err("[model]\nkind = ac\n[time]\ndt = 1e-3\nt_final = 1\n[output]\nformat = hdf5\n");
    config_err("[model]\nkind = ac\nmodel.kind = ch\n[time]\ndt = 1e-3\nt_final = 1\n");
}

#[test]
fn ac_without_stabilisation_rejected() {
    config_err("[model]\nkind = ac\nkappa = 0\n[time]\ndt = 1e-3\nt_final = 1\n");
}

#[test]
fn list_parsing() {
    assert_eq!(parse_list("0.1, 0.05,0.025").unwrap(), vec![0.1, 0.05, 0.025]);
    assert!(parse_list("0.1,x").is_err());
    assert!(parse_list("inf").is_err());
}

#[test]
fn load_missing_file() {
    let e = RunConfig::load(std::path::Path::new("/nonexistent/run.ini")).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
