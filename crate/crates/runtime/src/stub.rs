//! Tiny hand-built ONNX graphs with known outputs, for tests and smoke runs.

use prost::Message;
use tract_onnx::pb::attribute_proto::AttributeType;
use tract_onnx::pb::tensor_shape_proto::dimension;
use tract_onnx::pb::{
    tensor_shape_proto, type_proto, AttributeProto, GraphProto, ModelProto, NodeProto, OperatorSetIdProto, TensorProto,
    TensorShapeProto, TypeProto, ValueInfoProto,
};

const FLOAT: i32 = 1;

/// Name of the input tensor in every stub graph.
pub const INPUT: &str = "input";

fn dim(d: Option<usize>, param: &str) -> tensor_shape_proto::Dimension {
    let value = match d {
        Some(n) => dimension::Value::DimValue(n as i64),
        None => dimension::Value::DimParam(param.to_owned()),
    };
    tensor_shape_proto::Dimension {
        value: Some(value),
        ..Default::default()
    }
}

fn value_info(name: &str, dims: Vec<tensor_shape_proto::Dimension>) -> ValueInfoProto {
    ValueInfoProto {
        name: name.to_owned(),
        r#type: Some(TypeProto {
            value: Some(type_proto::Value::TensorType(type_proto::Tensor {
                elem_type: FLOAT,
                shape: Some(TensorShapeProto { dim: dims }),
            })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn image_input(side: Option<usize>) -> ValueInfoProto {
    value_info(
        INPUT,
        vec![dim(Some(1), "N"), dim(Some(3), "C"), dim(side, "H"), dim(side, "W")],
    )
}

fn output(name: &str) -> ValueInfoProto {
    ValueInfoProto {
        name: name.to_owned(),
        ..Default::default()
    }
}

fn initializer(name: &str, dims: &[i64], values: Vec<f32>) -> TensorProto {
    TensorProto {
        name: name.to_owned(),
        dims: dims.to_vec(),
        data_type: FLOAT,
        float_data: values,
        ..Default::default()
    }
}

fn node(op: &str, inputs: &[&str], out: &str, attribute: Vec<AttributeProto>) -> NodeProto {
    NodeProto {
        name: format!("{out}_node"),
        op_type: op.to_owned(),
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![out.to_owned()],
        attribute,
        ..Default::default()
    }
}

fn ints(name: &str, v: &[i64]) -> AttributeProto {
    AttributeProto {
        name: name.to_owned(),
        r#type: AttributeType::Ints as i32,
        ints: v.to_vec(),
        ..Default::default()
    }
}

fn int(name: &str, v: i64) -> AttributeProto {
    AttributeProto {
        name: name.to_owned(),
        r#type: AttributeType::Int as i32,
        i: v,
        ..Default::default()
    }
}

fn encode(graph: GraphProto) -> Vec<u8> {
    ModelProto {
        ir_version: 7,
        opset_import: vec![OperatorSetIdProto {
            domain: String::new(),
            version: 13,
        }],
        producer_name: "inpaint-eval-stub".into(),
        graph: Some(graph),
        ..Default::default()
    }
    .encode_to_vec()
}

/// A 3x3 convolution with all-ones weights, one output channel, no padding
/// and no bias, so each output is the sum of a 3x3x3 input window.
/// The conv result is named `conv`; `relu` follows it and is the graph output.
/// `side = None` leaves the spatial dims symbolic.
pub fn ones_conv3x3(side: Option<usize>) -> Vec<u8> {
    let out_side = side.map(|s| s.saturating_sub(2));
    encode(GraphProto {
        name: "ones_conv3x3".into(),
        node: vec![
            node("Conv", &[INPUT, "w"], "conv", vec![ints("kernel_shape", &[3, 3])]),
            node("Relu", &["conv"], "relu", vec![]),
        ],
        initializer: vec![initializer("w", &[1, 3, 3, 3], vec![1.0; 27])],
        input: vec![image_input(side)],
        output: vec![value_info(
            "relu",
            vec![
                dim(Some(1), "N"),
                dim(Some(1), "C"),
                dim(out_side, "OH"),
                dim(out_side, "OW"),
            ],
        )],
        ..Default::default()
    })
}

/// Passes the input through unchanged as `output`.
pub fn identity(side: Option<usize>) -> Vec<u8> {
    encode(GraphProto {
        name: "identity".into(),
        node: vec![node("Identity", &[INPUT], "output", vec![])],
        input: vec![image_input(side)],
        output: vec![output("output")],
        ..Default::default()
    })
}

/// Ignores the image and emits `values` as a `[1, n]` tensor named `logits`.
/// Built as a zero-weight 1x1 conv with bias, global average pool, flatten.
pub fn constant_head(values: &[f32], side: Option<usize>) -> Vec<u8> {
    let n = values.len() as i64;
    encode(GraphProto {
        name: "constant_head".into(),
        node: vec![
            node("Conv", &[INPUT, "w", "b"], "conv", vec![ints("kernel_shape", &[1, 1])]),
            node("GlobalAveragePool", &["conv"], "pooled", vec![]),
            node("Flatten", &["pooled"], "logits", vec![int("axis", 1)]),
        ],
        initializer: vec![
            initializer("w", &[n, 3, 1, 1], vec![0.0; values.len() * 3]),
            initializer("b", &[n], values.to_vec()),
        ],
        input: vec![image_input(side)],
        output: vec![output("logits")],
        ..Default::default()
    })
}
