//! Parameter resolution: built-in defaults, then the JSON config file, then
//! command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Failure;

/// A subcommand's flag set together with its fully resolved configuration.
pub trait Params: Serialize {
    type Config: Resolved;
    const NAME: &'static str;
    fn defaults() -> Value;

    fn resolve(&self, file: Option<&Map<String, Value>>) -> Result<Self::Config, Failure> {
        let flags = serde_json::to_value(self).map_err(|e| Failure::Input(e.to_string()))?;
        resolve(Self::NAME, Self::defaults(), file, flags)
    }
}

pub trait Resolved: Serialize + DeserializeOwned {
    fn out(&self) -> Option<&Path>;
    fn threads(&self) -> Option<usize>;
}

/// Declares the flag struct (every field optional) and the resolved config
/// struct (required fields plain, optional fields `Option`) for one
/// subcommand from a single field list.
macro_rules! params {
    (
        $(#[$meta:meta])*
        $name:literal, $args:ident => $conf:ident {
            $( $(#[doc = $doc:literal])* $field:ident $(as $key:literal)? : $ty:ty, )*
        }
        optional {
            $( $(#[doc = $odoc:literal])* $ofield:ident : $oty:ty, )*
        }
        defaults $defaults:tt
    ) => {
        $(#[$meta])*
        #[derive(clap::Args, serde::Serialize, Debug, Default)]
        #[command(allow_negative_numbers = true)]
        pub struct $args {
            $(
                $(#[doc = $doc])*
                #[arg(long $(= $key)?)]
                #[serde($(rename = $key,)? skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
            $(
                $(#[doc = $odoc])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $ofield: Option<$oty>,
            )*
            /// Write the JSON report here instead of standard output.
            #[arg(long)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub out: Option<std::path::PathBuf>,
            /// Worker thread cap (falls back to BHL_THREADS).
            #[arg(long)]
            #[serde(skip_serializing_if = "Option::is_none")]
            pub threads: Option<usize>,
        }

        #[derive(serde::Serialize, serde::Deserialize, Debug, Clone, PartialEq)]
        #[serde(deny_unknown_fields)]
        pub struct $conf {
            $( $(#[serde(rename = $key)])? pub $field: $ty, )*
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $ofield: Option<$oty>,
            )*
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub out: Option<std::path::PathBuf>,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub threads: Option<usize>,
        }

        impl $crate::config::Params for $args {
            type Config = $conf;
            const NAME: &'static str = $name;
            fn defaults() -> serde_json::Value {
                serde_json::json!($defaults)
            }
        }

        impl $crate::config::Resolved for $conf {
            fn out(&self) -> Option<&std::path::Path> {
                self.out.as_deref()
            }
            fn threads(&self) -> Option<usize> {
                self.threads
            }
        }
    };
}
pub(crate) use params;

/// Read a config file. The optional `subcommand` key must match the one being
/// run and is dropped; everything else is handed to the subcommand.
pub fn load_file(path: &Path, subcommand: &str) -> Result<Map<String, Value>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Unreadable { path: path.to_path_buf(), source: e })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(Failure::Input(format!("{}: config must be a JSON object", path.display())));
    };
    match map.remove("subcommand") {
        None => {}
        Some(Value::String(s)) if s == subcommand => {}
        Some(other) => {
            return Err(Failure::Input(format!("config is for subcommand {other}, not \"{subcommand}\"")));
        }
    }
    Ok(map)
}

pub fn resolve<C: DeserializeOwned>(
    name: &str,
    defaults: Value,
    file: Option<&Map<String, Value>>,
    flags: Value,
) -> Result<C, Failure> {
    let Value::Object(mut merged) = defaults else { unreachable!("defaults are an object") };
    if let Some(file) = file {
        merged.extend(file.clone());
    }
    if let Value::Object(flags) = flags {
        merged.extend(flags);
    }
    // explicit nulls in a file mean "unset"
    merged.retain(|_, v| !v.is_null());
    check_tolerances(&merged)?;
    serde_json::from_value(Value::Object(merged)).map_err(|e| {
        let msg = e.to_string();
        match msg.strip_prefix("missing field ") {
            Some(rest) => Failure::MissingKey(format!("{} for {name}", rest.trim_matches('`'))),
            None => Failure::Input(format!("{name}: {msg}")),
        }
    })
}

/// Every `*_tol` key must be a positive finite number.
fn check_tolerances(map: &Map<String, Value>) -> Result<(), Failure> {
    for (k, v) in map {
        if k.ends_with("_tol") {
            match v.as_f64() {
                Some(x) if x > 0.0 && x.is_finite() => {}
                _ => return Err(Failure::Input(format!("tolerance {k} must be a positive number, got {v}"))),
            }
        }
    }
    Ok(())
}

/// Thread cap from the config, else BHL_THREADS, else rayon's default.
pub fn thread_count(requested: Option<usize>) -> Result<Option<usize>, Failure> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var("BHL_THREADS") {
            Ok(s) => Some(s.trim().parse::<usize>().map_err(|_| Failure::Input(format!("BHL_THREADS = {s:?}")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Failure::Input("thread count must be positive".into()));
    }
    Ok(n)
}
