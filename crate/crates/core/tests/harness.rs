use phonon_core::dispersion::DispersionModel;
use phonon_core::harness::*;
use phonon_core::Error;

fn nn() -> DispersionModel {
    DispersionModel::nearest_neighbor()
}

fn small_config(out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        n_list: vec![16, 32],
        families: vec![
            InitialFamily::macroscopic(),
            InitialFamily::packet([0.25, 0.0, 0.0]),
        ],
        times: vec![0.0, 0.25],
        rho: vec![0.125],
        m_cut: vec![4.0],
        p_max: 3,
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn config_json_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let text = cfg.to_json().unwrap();
    let back = ExperimentConfig::from_json(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json().unwrap(), text);

    let path = dir.path().join("cfg.json");
    cfg.save(&path).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    let again = dir.path().join("cfg2.json");
    loaded.save(&again).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig {
            n_list: vec![],
            ..Default::default()
        },
        ExperimentConfig {
            n_list: vec![9],
            ..Default::default()
        },
        ExperimentConfig {
            n_list: vec![8],
            p_max: 6,
            ..Default::default()
        },
        ExperimentConfig {
            rho: vec![0.5],
            ..Default::default()
        },
        ExperimentConfig {
            m_cut: vec![2.0],
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
        assert!(ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).is_err());
    }
}

#[test]
fn family_names() {
    for name in [
        "point_source",
        "macroscopic",
        "packet",
        "mesoscopic",
        "mixture",
    ] {
        assert_eq!(InitialFamily::by_name(name).unwrap().name(), name);
    }
    assert!(matches!(
        InitialFamily::by_name("soliton"),
        Err(Error::Unknown { .. })
    ));
}

#[test]
fn point_source_initial_data() {
    for n in [8, 16] {
        let s = InitialFamily::PointSource.build_initial(n, &nn()).unwrap();
        assert_eq!(s.u[s.index([0, 0, 0])], 1.0);
        assert_eq!(s.u.iter().filter(|x| **x != 0.0).count(), 1);
        assert!(s.v.iter().all(|x| *x == 0.0));
    }
}

#[test]
fn macroscopic_mass_is_stable_in_n() {
    let fam = InitialFamily::macroscopic();
    let masses: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| fam.build_mode(n, &nn()).unwrap().mass())
        .collect();
    for m in &masses {
        assert!((m - masses[2]).abs() <= 0.05 * masses[2], "{masses:?}");
    }
}

#[test]
fn mixture_components_keep_their_weights() {
    let w = [0.2, 0.5, 0.3];
    let fam = InitialFamily::three_way_mixture(w);
    let InitialFamily::Mixture { components } = &fam else {
        unreachable!()
    };
    let n = 64;
    for c in components {
        let m = c.weight * c.family.build_mode(n, &nn()).unwrap().mass();
        assert!(
            (m - c.weight).abs() <= 0.05 * c.weight,
            "{}: {m}",
            c.family.name()
        );
    }
    // disjoint spectral supports: no cross terms
    let total = fam.build_mode(n, &nn()).unwrap().mass();
    assert!((total - 1.0).abs() <= 0.05, "{total}");
}

#[test]
fn invalid_families_are_rejected() {
    assert!(InitialFamily::packet([0.0; 3]).validate().is_err());
    let meso = InitialFamily::Mesoscopic {
        direction: [1.0, 0.0, 0.0],
        exponent: 1.5,
        envelope: Envelope::new([0.0; 3], 0.2).unwrap(),
    };
    assert!(meso.validate().is_err());
    assert!(Envelope::new([0.0; 3], -1.0).is_err());
    let nested = InitialFamily::Mixture {
        components: vec![MixtureComponent {
            weight: 1.0,
            family: InitialFamily::PointSource,
        }],
    };
    assert!(nested.validate().is_err());
}

#[test]
fn envelope_tails_are_within_declared_profile() {
    let radii = [0.1, 0.2, 0.3, 0.4];
    for fam in [
        InitialFamily::macroscopic(),
        InitialFamily::packet([0.25, 0.0, 0.0]),
        InitialFamily::mesoscopic(),
    ] {
        let audit = tail_audit(&fam, 64, &nn(), &radii).unwrap();
        assert!(audit.within(0.05), "{audit:?}");
    }
}

#[test]
fn fig2_profiles_and_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let d = nn();
    let eps = 1.0 / 20.0;
    let r = reproduce_fig2(&d, eps, 48, Some(dir.path())).unwrap();
    let h = 24i64;
    let mut initial = vec![0.0; 48];
    initial[h as usize] = 1.0;
    assert_eq!(r.profiles[0], initial);
    assert!(r.energy_drift <= 1e-12, "{r:?}");
    assert!(r.max_imag <= 1e-10);
    // the front is only sharp once it is many sites out
    assert!(
        r.fraction_within[2] >= 0.99 && r.uv_fraction_within[2] >= 0.99,
        "{r:?}"
    );
    assert!(dir.path().join("fig2_profiles.csv").exists());
    let json = std::fs::read_to_string(dir.path().join("fig2_report.json")).unwrap();
    assert_eq!(serde_json::from_str::<Fig2Report>(&json).unwrap(), r);
}

#[test]
fn figures_reject_small_boxes() {
    let d = nn();
    assert!(matches!(
        reproduce_fig2(&d, 1.0 / 70.0, 64, None),
        Err(Error::Horizon { .. })
    ));
    assert!(matches!(
        reproduce_fig1(&d, 1.0 / 32.0, 32, 1e-6, None),
        Err(Error::Horizon { .. })
    ));
    assert!(reproduce_fig1(&d, 1.0 / 32.0, 80, 2.0, None).is_err());
}

#[test]
fn fig1_small_box() {
    let dir = tempfile::tempdir().unwrap();
    let d = nn();
    let r = reproduce_fig1(&d, 1.0 / 32.0, 80, 1e-6, Some(dir.path())).unwrap();
    assert!(r.energy_drift <= 1e-12);
    assert!(r.symmetry_error <= 1e-10, "{r:?}");
    assert!(r
        .plane_energy
        .iter()
        .zip(&r.energy)
        .all(|(p, e)| p > &0.0 && p <= e));
    assert!(r.front_radius.windows(2).all(|w| w[1] > w[0]), "{r:?}");
    assert!(r.caustic_points > 0);
    for t in &r.times {
        let pgm = std::fs::read_to_string(dir.path().join(format!("fig1_t{t}.pgm"))).unwrap();
        assert!(pgm.starts_with("P2\n80 80\n255\n"));
        assert_eq!(pgm.split_whitespace().count(), 4 + 80 * 80);
    }
    assert!(dir.path().join("fig1_caustics.csv").exists());
    assert!(dir.path().join("fig1_report.json").exists());
}

#[test]
fn pgm_rejects_wrong_size() {
    let dir = tempfile::tempdir().unwrap();
    assert!(write_pgm(&dir.path().join("x.pgm"), 3, 3, &[0; 8]).is_err());
}

#[test]
fn suite_rows_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_convergence_suite(&small_config(a.path()), true).unwrap();
    let rb = run_convergence_suite(&small_config(b.path()), true).unwrap();
    let cfg = small_config(a.path());
    let expect =
        cfg.families.len() * cfg.n_list.len() * cfg.times.len() * cfg.rho.len() * cfg.m_cut.len();
    assert_eq!(ra.rows.len(), expect);
    let bytes = |d: &tempfile::TempDir| {
        let text = std::fs::read_to_string(d.path().join("suite_report.json")).unwrap();
        let dir = d.path().to_string_lossy().into_owned();
        text.replace(&dir, "OUT")
    };
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(ra.rows, rb.rows);
    for row in &ra.rows {
        assert!(row.total > 0.0 && row.abs_error.is_finite());
    }
}
