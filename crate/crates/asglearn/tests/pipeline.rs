//! End-to-end pipeline tests on the bundled tasks.

mod common;

use std::path::{Path, PathBuf};

use asglearn::oracle::{EqualAbOracle, EqualCountsOracle, Oracle};
use asglearn::pipeline::{
    dataset, equivalence_check, run_all, run_exploit, run_explore, run_learn, score_file,
    OracleSpec, PipelineError, ProviderSpec, RunConfig,
};

fn tasks_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../tasks")
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "asglearn-test-{tag}-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    std::fs::remove_dir_all(&dir).ok();
    dir
}

fn equal_counts_config(tag: &str, seed: u64) -> RunConfig {
    let mut config = RunConfig::new("anbncn", tasks_dir().join("anbncn.cfg"));
    config.truth_asg_path = Some(tasks_dir().join("anbncn.asg"));
    config.provider = ProviderSpec::Ngram {
        order: 3,
        exemplars: vec!["abc".into(), "aabbcc".into(), "aaabbbccc".into()],
    };
    config.oracle = OracleSpec::EqualCounts;
    config.seed = seed;
    config.eval_samples = 60;
    config.out_dir = scratch_dir(tag);
    config
}

fn equal_ab_config(tag: &str, seed: u64) -> RunConfig {
    let mut config = RunConfig::new("anbncm", tasks_dir().join("anbncm.cfg"));
    config.truth_asg_path = Some(tasks_dir().join("anbncm.asg"));
    config.provider = ProviderSpec::Ngram {
        order: 3,
        exemplars: vec![
            "abc".into(),
            "abcc".into(),
            "aabbc".into(),
            "aabbccc".into(),
        ],
    };
    config.oracle = OracleSpec::EqualAb;
    config.seed = seed;
    config.eval_samples = 60;
    config.out_dir = scratch_dir(tag);
    config
}

#[test]
fn recovers_equal_counts_grammar_end_to_end() {
    let config = equal_counts_config("recover-n", 1);
    let report = run_all(&config).expect("pipeline runs");
    let equivalence = report.equivalence.expect("ground truth configured");
    assert!(
        equivalence.equivalent,
        "learned grammar differs: {:?}",
        equivalence.counterexamples
    );
    assert_eq!(report.exploit.accuracy, Some(1.0));
    assert_eq!(report.exploit.terminated, report.exploit.samples);
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn recovers_free_tail_grammar_end_to_end() {
    let config = equal_ab_config("recover-m", 1);
    let report = run_all(&config).expect("pipeline runs");
    let equivalence = report.equivalence.expect("ground truth configured");
    assert!(
        equivalence.equivalent,
        "learned grammar differs: {:?}",
        equivalence.counterexamples
    );
    assert_eq!(report.exploit.accuracy, Some(1.0));
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn dataset_accounting_adds_up() {
    let config = equal_counts_config("accounting", 3);
    let report = run_all(&config).expect("pipeline runs");
    let d = &report.dataset;
    assert_eq!(d.attempted, 3 * 10 * 11);
    assert_eq!(d.labeled + d.dropped_unterminated, d.attempted);
    assert_eq!(d.positives + d.negatives + d.deduplicated_away, d.labeled);
    assert!(d.positives > 0, "exploration found positives");
    assert!(d.negatives > 0, "exploration found negatives");
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn same_seed_reproduces_report_and_artifacts() {
    let config_a = equal_counts_config("repro-a", 7);
    let config_b = RunConfig {
        out_dir: scratch_dir("repro-b"),
        ..config_a.clone()
    };
    let report_a = run_all(&config_a).expect("first run");
    let report_b = run_all(&config_b).expect("second run");
    assert_eq!(report_a.dataset, report_b.dataset);
    assert_eq!(report_a.hypothesis, report_b.hypothesis);
    assert_eq!(report_a.exploit, report_b.exploit);
    assert_eq!(report_a.equivalence, report_b.equivalence);
    for name in ["dataset.tsv", "learned.asg", "samples.tsv"] {
        let a = std::fs::read(config_a.out_dir.join(name)).unwrap();
        let b = std::fs::read(config_b.out_dir.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs across identical runs");
    }
    std::fs::remove_dir_all(&config_a.out_dir).ok();
    std::fs::remove_dir_all(&config_b.out_dir).ok();
}

#[test]
fn unconstrained_baseline_reports_imperfect_accuracy() {
    let mut config = equal_counts_config("unconstrained", 1);
    config.unconstrained = true;
    config.eval_samples = 200;
    let explored = run_explore(&config).expect("explore");
    let learned = run_learn(&config, &explored.dataset_path).expect("learn");
    let exploited = run_exploit(&config, &learned.asg_path, config.eval_samples).expect("exploit");
    let accuracy = exploited.stats.accuracy.expect("samples requested");
    assert!(
        accuracy < 1.0,
        "unconstrained ngram decoding should make mistakes, got {accuracy}"
    );
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn zero_sample_exploit_reports_no_accuracy() {
    let config = equal_counts_config("zero-eval", 1);
    let explored = run_explore(&config).expect("explore");
    let learned = run_learn(&config, &explored.dataset_path).expect("learn");
    let exploited = run_exploit(&config, &learned.asg_path, 0).expect("exploit");
    assert_eq!(exploited.stats.accuracy, None);
    assert_eq!(exploited.stats.samples, 0);
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn learn_surfaces_contradictory_labels() {
    let config = equal_counts_config("contradict", 1);
    std::fs::create_dir_all(&config.out_dir).unwrap();
    let path = config.out_dir.join("bad.tsv");
    std::fs::write(&path, "abc\t1\ti1\t0.5\t0\t1\nabc\t0\ti1\t0.6\t1\t1\n").unwrap();
    match run_learn(&config, &path) {
        Err(PipelineError::Oracle(e)) => {
            assert!(e.to_string().contains("inconsistent"), "{e}");
        }
        other => panic!("expected inconsistency error, got {other:?}"),
    }
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn learn_warns_without_negatives() {
    let config = equal_counts_config("no-negatives", 1);
    std::fs::create_dir_all(&config.out_dir).unwrap();
    let path = config.out_dir.join("positive-only.tsv");
    std::fs::write(&path, "abc\t1\ti1\t0.5\t0\t1\naabbcc\t1\ti1\t0.6\t1\t1\n").unwrap();
    let outcome = run_learn(&config, &path).expect("learn");
    assert!(outcome.hypothesis.selected.is_empty());
    assert!(
        outcome
            .summary
            .warnings
            .iter()
            .any(|w| w.contains("insufficient negative coverage")),
        "warnings: {:?}",
        outcome.summary.warnings
    );
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn learn_flags_missing_violation_classes() {
    // Negatives only ever violate a = c, so the a = b tie is undetermined.
    let config = equal_counts_config("missing-class", 1);
    std::fs::create_dir_all(&config.out_dir).unwrap();
    let path = config.out_dir.join("narrow.tsv");
    std::fs::write(
        &path,
        "abc\t1\ti1\t0.5\t0\t1\naabbcc\t1\ti1\t0.6\t1\t1\naabc\t0\ti1\t0.7\t2\t1\naabbc\t0\ti1\t0.8\t3\t1\n",
    )
    .unwrap();
    let outcome = run_learn(&config, &path).expect("learn");
    assert!(
        outcome
            .summary
            .warnings
            .iter()
            .any(|w| w.contains("undetermined")),
        "warnings: {:?}",
        outcome.summary.warnings
    );
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn export_flag_writes_the_learning_task() {
    let mut config = equal_counts_config("export", 1);
    config.export_task = true;
    let explored = run_explore(&config).expect("explore");
    let learned = run_learn(&config, &explored.dataset_path).expect("learn");
    let task_text = std::fs::read_to_string(config.out_dir.join("task.ilasp")).expect("exported");
    assert!(task_text.contains("#pos("));
    assert!(task_text.contains("#neg("));
    assert!(task_text.contains("candidate 0"));
    assert!(!learned.hypothesis.selected.is_empty());
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn dataset_files_round_trip() {
    let config = equal_counts_config("roundtrip", 5);
    let explored = run_explore(&config).expect("explore");
    let rows = dataset::read(&explored.dataset_path).expect("read back");
    assert_eq!(rows, explored.rows);
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn score_file_matches_oracle_counts() {
    let config = equal_counts_config("score", 2);
    std::fs::create_dir_all(&config.out_dir).unwrap();
    let path = config.out_dir.join("scored.tsv");
    std::fs::write(
        &path,
        "abc\t1\ti1\t0.5\t0\t1\naabc\t0\ti1\t0.5\t1\t1\naabbcc\t1\ti1\t0.5\t2\t1\n",
    )
    .unwrap();
    let stats = score_file(&config, &path).expect("score");
    assert_eq!(stats.samples, 3);
    assert_eq!(stats.oracle_passing, 2);
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn learned_grammar_file_reloads_and_matches_truth_by_membership() {
    let config = equal_counts_config("reload", 1);
    let explored = run_explore(&config).expect("explore");
    let learned = run_learn(&config, &explored.dataset_path).expect("learn");
    let reloaded = asglearn::asg::AnnotatedGrammar::parse(
        &std::fs::read_to_string(&learned.asg_path).unwrap(),
    )
    .expect("learned file parses");
    let truth = asglearn::asg::AnnotatedGrammar::parse(
        &std::fs::read_to_string(tasks_dir().join("anbncn.asg")).unwrap(),
    )
    .expect("truth parses");
    let report = equivalence_check(&reloaded, &truth, 10);
    assert!(report.equivalent, "{report:?}");
    std::fs::remove_dir_all(&config.out_dir).ok();
}

#[test]
fn built_in_oracles_agree_with_truth_grammars() {
    let truth_n = asglearn::asg::AnnotatedGrammar::parse(
        &std::fs::read_to_string(tasks_dir().join("anbncn.asg")).unwrap(),
    )
    .unwrap();
    let truth_m = asglearn::asg::AnnotatedGrammar::parse(
        &std::fs::read_to_string(tasks_dir().join("anbncm.asg")).unwrap(),
    )
    .unwrap();
    let alphabet = ['a', 'b', 'c'];
    // Walk all strings to length 12, pruning subtrees where the string has
    // already left a^* b^* c^* shape: there the oracles and the grammars
    // (whose CFGs enforce block shape) are all trivially false.
    let block_shaped = |s: &str| {
        let a = s.chars().take_while(|&c| c == 'a').count();
        let b = s[a..].chars().take_while(|&c| c == 'b').count();
        s[a + b..].chars().all(|c| c == 'c')
    };
    let mut stack = vec![String::new()];
    let mut checked = 0usize;
    while let Some(s) = stack.pop() {
        assert_eq!(
            EqualCountsOracle.check(&s).unwrap(),
            truth_n.member(&s).unwrap(),
            "equal-counts oracle vs grammar on {s:?}"
        );
        assert_eq!(
            EqualAbOracle.check(&s).unwrap(),
            truth_m.member(&s).unwrap(),
            "free-tail oracle vs grammar on {s:?}"
        );
        // Positive labels imply CFG membership on the bundled tasks.
        if EqualCountsOracle.check(&s).unwrap() {
            assert!(truth_n.grammar().recognize(&s));
        }
        if EqualAbOracle.check(&s).unwrap() {
            assert!(truth_m.grammar().recognize(&s));
        }
        checked += 1;
        if s.len() < 12 {
            for c in alphabet {
                let next = format!("{s}{c}");
                if block_shaped(&next) {
                    stack.push(next);
                } else {
                    // One representative check per pruned subtree.
                    assert!(!EqualCountsOracle.check(&next).unwrap());
                    assert!(!truth_n.member(&next).unwrap());
                    assert!(!EqualAbOracle.check(&next).unwrap());
                    assert!(!truth_m.member(&next).unwrap());
                }
            }
        }
    }
    assert!(checked > 400, "walked {checked} block-shaped strings");
}

#[test]
fn config_file_round_trip_drives_run() {
    let out = scratch_dir("config-file");
    let config_path = tasks_dir().join("anbncn.conf");
    let mut config = RunConfig::load(&config_path).expect("bundled config loads");
    config.out_dir = out.clone();
    config.eval_samples = 20;
    let report = run_all(&config).expect("pipeline runs from file config");
    assert!(report.equivalence.expect("truth configured").equivalent);
    std::fs::remove_dir_all(&out).ok();
}
