//! Shared test helpers. The cost oracle here walks the bottleneck network
//! layer by layer from its textual description and never touches the graph
//! builder, so agreement with the library is a real cross-check.

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

/// Cost of one enumerated layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerCost {
    pub params: u64,
    pub flops: u64,
    pub out_elems: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OracleTotals {
    pub params: u64,
    pub flops: u64,
    pub activation_elems: u64,
    pub layers: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSpec {
    pub blocks: [u32; 4],
    pub width: f64,
    pub resolution: u64,
    pub resnet_d: bool,
    pub se_ratio: f64,
}

/// Nominal channel count scaled by `width`, halves rounded up.
fn chans(nominal: u64, width: f64) -> u64 {
    let x = nominal as f64 * width;
    let floor = x.floor();
    if x - floor >= 0.5 {
        floor as u64 + 1
    } else {
        floor as u64
    }
}

struct Walk {
    layers: Vec<LayerCost>,
}

impl Walk {
    fn conv(&mut self, h_in: u64, cin: u64, cout: u64, k: u64, stride: u64) -> u64 {
        let h = h_in / stride;
        self.layers.push(LayerCost {
            params: k * k * cin * cout,
            flops: 2 * h * h * cout * k * k * cin,
            out_elems: h * h * cout,
        });
        h
    }

    fn bn(&mut self, h: u64, c: u64) {
        self.layers.push(LayerCost {
            params: 2 * c,
            flops: 2 * h * h * c,
            out_elems: h * h * c,
        });
    }

    fn eltwise(&mut self, h: u64, c: u64) {
        self.layers.push(LayerCost {
            params: 0,
            flops: h * h * c,
            out_elems: h * h * c,
        });
    }

    fn pool(&mut self, h_in: u64, c: u64, k: u64, stride: u64) -> u64 {
        let h = h_in / stride;
        self.layers.push(LayerCost {
            params: 0,
            flops: h * h * c * k * k,
            out_elems: h * h * c,
        });
        h
    }

    fn conv_bn(&mut self, h_in: u64, cin: u64, cout: u64, k: u64, stride: u64, relu: bool) -> u64 {
        let h = self.conv(h_in, cin, cout, k, stride);
        self.bn(h, cout);
        if relu {
            self.eltwise(h, cout);
        }
        h
    }
}

pub fn oracle_costs(spec: &OracleSpec) -> OracleTotals {
    let w = spec.width;
    let mut walk = Walk { layers: Vec::new() };
    let mut h = spec.resolution;
    let mut c;

    if spec.resnet_d {
        let (a, b, d) = (chans(32, w), chans(32, w), chans(64, w));
        h = walk.conv_bn(h, 3, a, 3, 2, true);
        h = walk.conv_bn(h, a, b, 3, 1, true);
        h = walk.conv_bn(h, b, d, 3, 1, true);
        c = d;
    } else {
        c = chans(64, w);
        h = walk.conv_bn(h, 3, c, 7, 2, true);
        h = walk.pool(h, c, 3, 2);
    }

    for (stage, &n) in spec.blocks.iter().enumerate() {
        let mid = chans(64 << stage, w);
        let out = chans(256 << stage, w);
        for j in 0..n {
            let stride = if j == 0 && (stage > 0 || spec.resnet_d) { 2 } else { 1 };
            let (s1, s3) = if spec.resnet_d { (1, stride) } else { (stride, 1) };
            let h_in = h;
            let mut hm = walk.conv_bn(h_in, c, mid, 1, s1, true);
            hm = walk.conv_bn(hm, mid, mid, 3, s3, true);
            hm = walk.conv_bn(hm, mid, out, 1, 1, false);
            if spec.se_ratio > 0.0 {
                let hidden = ((spec.se_ratio * out as f64).ceil() as u64).max(1);
                let e = hm * hm * out;
                // squeeze, two dense layers with biases, gating multiply
                walk.layers.push(LayerCost {
                    params: out * hidden + hidden + hidden * out + out,
                    flops: e + 2 * out * hidden + 2 * hidden * out + e,
                    out_elems: e,
                });
            }
            if !(stride == 1 && c == out) {
                if spec.resnet_d && stride == 2 {
                    let hp = walk.pool(h_in, c, 2, 2);
                    walk.conv_bn(hp, c, out, 1, 1, false);
                } else {
                    walk.conv_bn(h_in, c, out, 1, stride, false);
                }
            }
            walk.eltwise(hm, out);
            walk.eltwise(hm, out);
            h = hm;
            c = out;
        }
    }

    walk.layers.push(LayerCost {
        params: 0,
        flops: h * h * c,
        out_elems: c,
    });
    walk.layers.push(LayerCost {
        params: c * 1000 + 1000,
        flops: 2 * c * 1000,
        out_elems: 1000,
    });

    walk.layers.iter().fold(
        OracleTotals {
            layers: walk.layers.len(),
            ..Default::default()
        },
        |mut t, l| {
            t.params += l.params;
            t.flops += l.flops;
            t.activation_elems += l.out_elems;
            t
        },
    )
}

/// Multiply-accumulates of a convolution counted one kernel tap at a time.
pub fn conv_macs_by_taps(h_in: u64, w_in: u64, k: u64, stride: u64, cin: u64, cout: u64) -> u64 {
    let mut macs = 0;
    for _oy in 0..h_in / stride {
        for _ox in 0..w_in / stride {
            for _co in 0..cout {
                for _ky in 0..k {
                    for _kx in 0..k {
                        for _ci in 0..cin {
                            macs += 1;
                        }
                    }
                }
            }
        }
    }
    macs
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn load_schema(name: &str) -> serde_json::Value {
    let path = crate_dir().join("schemas").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).expect("schema is JSON")
}

pub fn assert_schema(schema_file: &str, instance: &serde_json::Value) {
    let schema = load_schema(schema_file);
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema_file} rejected output: {msgs:?}\n{instance}");
}

pub fn run_binary(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resnet-rs"))
        .args(args)
        .output()
        .expect("binary runs")
}
