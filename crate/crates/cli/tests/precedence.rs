use std::path::PathBuf;
use std::time::Duration;

use proptest::prelude::*;
use repro_cli::config::{resolve, FileConfig, Settings, DEFAULT_WORKSPACE_ROOT};
use rust_decimal::Decimal;

#[derive(Debug, Clone)]
struct Layer {
    budget_cents: Option<i64>,
    timeout_minutes: Option<u64>,
    workers: Option<usize>,
    mock: Option<bool>,
    root: Option<String>,
}

fn layer() -> impl Strategy<Value = Layer> {
    (
        proptest::option::of(0i64..100_000),
        proptest::option::of(1u64..600),
        proptest::option::of(1usize..64),
        proptest::option::of(any::<bool>()),
        proptest::option::of("[a-z]{1,8}"),
    )
        .prop_map(|(budget_cents, timeout_minutes, workers, mock, root)| Layer {
            budget_cents,
            timeout_minutes,
            workers,
            mock,
            root,
        })
}

fn to_toml(l: &Layer) -> String {
    let mut text = String::new();
    if let Some(c) = l.budget_cents {
        text += &format!("budget_usd = \"{}\"\n", Decimal::new(c, 2));
    }
    if let Some(t) = l.timeout_minutes {
        text += &format!("timeout_minutes = {t}\n");
    }
    if let Some(w) = l.workers {
        text += &format!("worker_count = {w}\n");
    }
    if let Some(m) = l.mock {
        text += &format!("mock_mode = {m}\n");
    }
    if let Some(r) = &l.root {
        text += &format!("workspace_root = \"{r}\"\n");
    }
    text
}

fn to_flags(l: &Layer) -> Settings {
    Settings {
        budget_usd: l.budget_cents.map(|c| Decimal::new(c, 2)),
        timeout_minutes: l.timeout_minutes,
        worker_count: l.workers,
        mock_mode: l.mock,
        workspace_root: l.root.as_ref().map(PathBuf::from),
        ..Settings::default()
    }
}

proptest! {
    #[test]
    fn flags_beat_file_beat_defaults(file in layer(), flags in layer(), key in proptest::option::of("[A-Za-z0-9]{0,12}")) {
        let parsed = FileConfig::parse(&to_toml(&file)).unwrap();
        let env_key = key.clone();
        let cfg = resolve(parsed, to_flags(&flags), move |name| {
            if name == "OPENAI_API_KEY" { env_key.clone() } else { None }
        }).unwrap();

        let budget = flags.budget_cents.or(file.budget_cents).unwrap_or(400);
        prop_assert_eq!(cfg.budget_usd, Decimal::new(budget, 2));
        let minutes = flags.timeout_minutes.or(file.timeout_minutes).unwrap_or(60);
        prop_assert_eq!(cfg.pipeline.global_timeout, Duration::from_secs(minutes * 60));
        prop_assert_eq!(cfg.worker_count, flags.workers.or(file.workers).unwrap_or(1));
        prop_assert_eq!(cfg.mock_mode, flags.mock.or(file.mock).unwrap_or(false));
        let root = flags.root.clone().or(file.root.clone()).unwrap_or_else(|| DEFAULT_WORKSPACE_ROOT.to_string());
        prop_assert_eq!(cfg.workspace_root, PathBuf::from(root));

        let expected_key = key.filter(|k| !k.is_empty());
        prop_assert_eq!(cfg.api_key.as_ref().map(|k| k.expose().to_string()), expected_key);
    }
}

#[test]
fn key_in_config_file_is_refused() {
    let err = FileConfig::parse("api_key = \"sk-123\"\n").unwrap_err();
    assert!(err.contains("environment"), "{err}");
}
