#![allow(dead_code)]

use std::path::PathBuf;

use mindstate_core::setting::parse_setting_text;
use mindstate_core::SettingRecord;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn palace() -> SettingRecord {
    parse_setting_text(&std::fs::read_to_string(fixture("palace.setting")).unwrap()).unwrap()
}
