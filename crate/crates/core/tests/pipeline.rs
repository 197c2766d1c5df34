use std::path::PathBuf;

use num_complex::Complex;

use zcradar::harness::{emit_results, near_far_scene, read_results, sweep, DetectionRateTable, SweepConfig};
use zcradar::rdmap::{detect, NoiseFloor, RangeDopplerProcessor, Reference};
use zcradar::scene::{load_scene, Noise, Scenario, Scene, Synthesizer};
use zcradar::{generate_zc, sc_dcft, synthesize_received, Canceller, DetectorConfig, Method};

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn case(k: usize) -> Scenario {
    Scenario::load(repo_file(&format!("scenarios/case{k}.json"))).unwrap()
}

fn labels<T>(items: &[T], f: impl Fn(&T) -> Option<String>) -> Vec<String> {
    items.iter().map(|x| f(x).unwrap_or_default()).collect()
}

#[test]
fn case_one_has_the_published_structure() {
    let c = case(1);
    assert_eq!((c.transmitters.len(), c.receivers.len(), c.targets.len()), (4, 2, 5));
    assert_eq!((c.carrier_hz, c.bandwidth_hz, c.n, c.eta), (5e8, 2e7, 2048, 8));
    assert!(c.transmitters.iter().all(|t| t.power_w == 500.0));
    let alt: Vec<f64> = c.targets.iter().map(|t| t.position[2]).collect();
    assert!(alt.windows(2).all(|w| w[0] < w[1]), "{alt:?}");
    assert!(c.note.as_deref().unwrap().contains("PLACEHOLDER"));
}

#[test]
fn cases_two_to_four_derive_from_case_one() {
    let base = case(1);
    let c2 = case(2);
    assert_eq!(labels(&c2.transmitters, |t| t.label.clone()), ["Tx-1", "Tx-3"]);
    assert_eq!(c2.transmitters, vec![base.transmitters[0].clone(), base.transmitters[2].clone()]);
    assert_eq!(c2.targets, base.targets);

    let c3 = case(3);
    assert_eq!(c3.transmitters, base.transmitters);
    assert_eq!(labels(&c3.targets, |t| t.label.clone()), ["Tgt-2", "Tgt-4"]);
    assert_eq!(c3.targets, vec![base.targets[1].clone(), base.targets[3].clone()]);

    let c4 = case(4);
    assert_eq!(c4.transmitters, base.transmitters);
    assert_eq!(c4.targets[0], base.targets[2]);
    let t6 = &c4.targets[1];
    assert_eq!(t6.label.as_deref(), Some("Tgt-6"));
    assert_eq!(t6.position, [-500.0, 0.0, 3975.0]);
    assert_eq!(t6.rcs_m2, 0.025);
    assert_eq!(t6.velocity, base.targets[3].velocity);
}

#[test]
fn case_four_weak_target_is_sixteen_db_down_at_equal_range() {
    let c4 = case(4);
    let echoes = c4.echoes(0).unwrap();
    // Same transmitter, both targets: the power ratio is σ₆/σ₃ scaled by ranges.
    for tx in 0..4 {
        let a3 = echoes.iter().find(|e| e.tx_index == tx && e.target_index == 0).unwrap();
        let a6 = echoes.iter().find(|e| e.tx_index == tx && e.target_index == 1).unwrap();
        let db = 20.0 * (a6.amplitude.norm() / a3.amplitude.norm()).log10();
        assert!((-18.0..-14.0).contains(&db), "tx {tx}: {db} dB");
    }
}

#[test]
fn scenario_keys_match_the_schema() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(repo_file("docs/scenario.schema.json")).unwrap()).unwrap();
    let props = schema["properties"].as_object().unwrap();
    for k in 1..=4 {
        let doc: serde_json::Value = serde_json::from_str(&case(k).to_json().unwrap()).unwrap();
        for key in doc.as_object().unwrap().keys() {
            assert!(props.contains_key(key), "case{k}: `{key}` missing from schema");
        }
        for key in schema["required"].as_array().unwrap() {
            assert!(doc.get(key.as_str().unwrap()).is_some());
        }
        for (list, item_keys) in [
            ("transmitters", &props["transmitters"]["items"]["properties"]),
            ("receivers", &props["receivers"]["items"]["properties"]),
            ("targets", &props["targets"]["items"]["properties"]),
        ] {
            for item in doc[list].as_array().unwrap() {
                for key in item.as_object().unwrap().keys() {
                    assert!(item_keys.get(key).is_some(), "{list}.{key}");
                }
            }
        }
    }
}

#[test]
fn shipped_near_far_file_matches_the_builtin_scene() {
    let loaded = load_scene(repo_file("scenarios/near_far.json"), 0).unwrap();
    assert_eq!(loaded, near_far_scene());
    assert!(load_scene(repo_file("scenarios/near_far.json"), 1).is_err());
}

#[test]
fn every_case_runs_end_to_end() {
    for k in 1..=4 {
        let c = case(k);
        for rx in 0..c.receivers.len() {
            let r = synthesize_received::<f64>(&c, rx, 10.0, 7).unwrap();
            let rep = sc_dcft(&r.samples, &c, 1e-4, 8).unwrap();
            assert!(!rep.detections.is_empty(), "case{k} rx{rx}");
            assert!(rep.residual_energy() <= r.samples.iter().map(|v| v.norm_sqr()).sum::<f64>());
        }
    }
}

#[test]
fn noise_only_false_alarms_match_pfa() {
    let (n, eta, pfa) = (2048usize, 8usize, 1e-4);
    let empty = Scene {
        n,
        eta,
        seeds: vec![1],
        target_count: 0,
        echoes: vec![],
        band_limit_fraction: None,
    };
    let synth = Synthesizer::<f64>::new(&empty).unwrap();
    let reference = Reference::new(generate_zc(1, n).unwrap());
    let expected = pfa * (n * eta) as f64;
    for floor in [NoiseFloor::MeanPower, NoiseFloor::Median] {
        let proc = RangeDopplerProcessor::new(n, eta).unwrap().with_noise_floor(floor);
        let mut alarms = 0usize;
        for seed in 0..1000 {
            let r = synth.realize(Noise::Power(1.0), seed).unwrap().samples;
            alarms += detect(&proc.compute(&r, &reference, 0).unwrap(), pfa).unwrap().len();
        }
        let mean = alarms as f64 / 1000.0;
        assert!((mean / expected - 1.0).abs() < 0.5, "{floor:?}: {mean} vs {expected}");
    }
}

#[test]
fn single_precision_pipeline_recovers_the_weak_target() {
    let scene = near_far_scene();
    let r = Synthesizer::<f32>::new(&scene).unwrap().realize(Noise::CompositeSnrDb(20.0), 3).unwrap();
    let canc = Canceller::<f32>::for_waveforms(&scene, DetectorConfig::default()).unwrap();
    let rep = canc.run(&r.samples, Method::ScDcft).unwrap();
    for e in &scene.echoes {
        assert!(zcradar::harness::is_hit(&rep, e, scene.n, scene.eta), "{e:?}");
    }
}

#[test]
fn empty_table_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_results(&DetectionRateTable::empty(2, 2, 10), &path, None).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "snr_db,target,tx,rate\n");
    assert!(read_results(&path).unwrap().is_empty());
}

#[test]
fn rate_csv_round_trips_and_plot_loads() {
    let scene = near_far_scene();
    let cfg = SweepConfig::new(vec![0.0, 12.0], 7, Method::ScDcft, 1e-4, 5);
    let table = sweep(&scene, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (csv_path, png_path) = (dir.path().join("rates.csv"), dir.path().join("rates.png"));
    emit_results(&table, &csv_path, Some(&png_path)).unwrap();

    let rows = read_results(&csv_path).unwrap();
    assert_eq!(rows, table.rows());
    assert_eq!(rows.len(), 2 * 2 * (2 + 2));
    for row in &rows {
        let s = table.snr_grid.iter().position(|&x| x == row.snr_db).unwrap();
        let want = match row.tx.as_str() {
            "any" => table.any_rate(s, row.target),
            "all" => table.all_rate(s, row.target),
            i => table.rate(s, row.target, i.parse().unwrap()),
        };
        assert_eq!(row.rate, want);
        assert_eq!((row.rate * 7.0).round() / 7.0, row.rate);
    }
    assert!(std::fs::metadata(&png_path).unwrap().len() > 0);
    image::open(&png_path).unwrap();
}

#[test]
fn detection_rows_carry_estimates() {
    let scene = near_far_scene();
    let r = Synthesizer::<f64>::new(&scene).unwrap().realize(Noise::None, 0).unwrap().samples;
    let rep = Canceller::for_waveforms(&scene, DetectorConfig::default())
        .unwrap()
        .run(&r, Method::ScDcft)
        .unwrap();
    let strong = rep
        .detections
        .iter()
        .find(|d| d.detection.tx_index == 0 && d.detection.delay_bin == 300)
        .unwrap();
    assert_eq!(strong.pass, 1);
    let truth = scene.echoes[0].normalized_doppler * (scene.n * scene.eta) as f64;
    assert!((strong.estimate.xi_hat * (scene.n * scene.eta) as f64 - truth).abs() < 0.5);
    let _: Complex<f64> = strong.estimate.alpha_hat;
}
