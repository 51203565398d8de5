//! Channel activations, looked up by name.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Element-wise nonlinearity used throughout one autoencoder channel.
pub trait Activation: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn apply(&self, z: f64) -> f64;

    /// Derivative with respect to the pre-activation `z`.
    fn derivative(&self, z: f64) -> f64;
}

#[derive(Debug)]
pub struct Sin;

impl Activation for Sin {
    fn name(&self) -> &'static str {
        "sin"
    }

    fn apply(&self, z: f64) -> f64 {
        z.sin()
    }

    fn derivative(&self, z: f64) -> f64 {
        z.cos()
    }
}

#[derive(Debug)]
pub struct Cos;

impl Activation for Cos {
    fn name(&self) -> &'static str {
        "cos"
    }

    fn apply(&self, z: f64) -> f64 {
        z.cos()
    }

    fn derivative(&self, z: f64) -> f64 {
        -z.sin()
    }
}

#[derive(Debug)]
pub struct Linear;

impl Activation for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn apply(&self, z: f64) -> f64 {
        z
    }

    fn derivative(&self, _z: f64) -> f64 {
        1.0
    }
}

#[derive(Debug)]
pub struct Relu;

impl Activation for Relu {
    fn name(&self) -> &'static str {
        "relu"
    }

    fn apply(&self, z: f64) -> f64 {
        z.max(0.0)
    }

    fn derivative(&self, z: f64) -> f64 {
        if z > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// `z · sigmoid(z)`.
#[derive(Debug)]
pub struct Swish;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation for Swish {
    fn name(&self) -> &'static str {
        "swish"
    }

    fn apply(&self, z: f64) -> f64 {
        z * sigmoid(z)
    }

    fn derivative(&self, z: f64) -> f64 {
        let s = sigmoid(z);
        s + z * s * (1.0 - s)
    }
}

/// Channel order of the default architecture.
pub const DEFAULT_CHANNELS: [&str; 5] = ["sin", "cos", "linear", "relu", "swish"];

#[derive(Debug, Clone)]
pub struct ActivationRegistry {
    entries: BTreeMap<String, Arc<dyn Activation>>,
}

impl ActivationRegistry {
    pub fn empty() -> Self {
        ActivationRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, activation: Arc<dyn Activation>) -> Result<()> {
        let name = activation.name().to_string();
        if self.entries.contains_key(&name) {
            return Err(Error::InvalidConfig(format!("activation `{name}` already registered")));
        }
        self.entries.insert(name, activation);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Activation>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "activation",
            name: name.to_string(),
        })
    }

    pub fn resolve<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Arc<dyn Activation>>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for ActivationRegistry {
    fn default() -> Self {
        let mut registry = ActivationRegistry::empty();
        let builtins: [Arc<dyn Activation>; 5] = [
            Arc::new(Sin),
            Arc::new(Cos),
            Arc::new(Linear),
            Arc::new(Relu),
            Arc::new(Swish),
        ];
        for activation in builtins {
            registry.register(activation).expect("builtin names are distinct");
        }
        registry
    }
}
