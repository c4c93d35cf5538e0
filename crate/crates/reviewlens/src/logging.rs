//! JSON Lines progress records on standard error.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use serde_json::{Map, Value};

static QUIET: AtomicBool = AtomicBool::new(false);

pub fn set_quiet(quiet: bool) {
    QUIET.store(quiet, Ordering::Relaxed);
}

/// Writes `{"level":"info","stage":..., ...fields}`; `fields` must be an
/// object.
pub fn info(stage: &str, fields: Value) {
    if QUIET.load(Ordering::Relaxed) {
        return;
    }
    let mut obj = Map::new();
    obj.insert("level".into(), "info".into());
    obj.insert("stage".into(), stage.into());
    if let Value::Object(f) = fields {
        obj.extend(f);
    }
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", Value::Object(obj));
}
