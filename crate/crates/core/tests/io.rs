mod common;

use common::*;
use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};
use proptest::prelude::*;
use vnl::io::{self, pfm, png16, DepthFormat, Pfm, PlyMode};
use vnl::{backproject_map, estimate_normal_map, CameraIntrinsics, DepthMap};

fn parse_ply(bytes: &[u8]) -> Vec<DefaultElement> {
    let ply = Parser::<DefaultElement>::new().read_ply(&mut &bytes[..]).unwrap();
    ply.payload["vertex"].clone()
}

fn float(e: &DefaultElement, key: &str) -> f32 {
    match e[key] {
        Property::Float(v) => v,
        ref other => panic!("{key}: {other:?}"),
    }
}

#[test]
fn ply_parses_in_independent_reader() {
    let (depth, _, k) = standard_scene();
    let cloud = backproject_map(&depth, &k);
    let normals = estimate_normal_map(&depth, &k, 1);
    for mode in [PlyMode::Ascii, PlyMode::BinaryLittleEndian] {
        for with_normals in [false, true] {
            let mut buf = Vec::new();
            io::write_ply_to(&mut buf, &cloud, with_normals.then_some(&normals), mode).unwrap();
            let verts = parse_ply(&buf);
            assert_eq!(verts.len(), cloud.len());
            for (v, p) in verts.iter().zip(&cloud.points) {
                assert_eq!(float(v, "x"), p.x as f32);
                assert_eq!(float(v, "y"), p.y as f32);
                assert_eq!(float(v, "z"), p.z as f32);
                assert_eq!(v.contains_key("nx"), with_normals);
            }
            if with_normals {
                let pix = cloud.pixel_index.as_ref().unwrap();
                for (v, &(r, c)) in verts.iter().zip(pix) {
                    let want = normals.get(r, c).map_or([0.0; 3], |n| [n.x as f32, n.y as f32, n.z as f32]);
                    assert_eq!([float(v, "nx"), float(v, "ny"), float(v, "nz")], want);
                }
            }
        }
    }
}

#[test]
fn depth_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (depth, _, k) = standard_scene();
    let path = dir.path().join("d.pfm");
    io::write_depth(&path, DepthFormat::Pfm, &depth, &k).unwrap();
    let back = io::read_depth(&path, DepthFormat::from_path(&path).unwrap(), &k).unwrap();
    for (a, b) in back.values().iter().zip(depth.values()) {
        assert_eq!(*a, *b as f32 as f64);
    }
    assert_eq!(back.mask(), depth.mask());

    let path = dir.path().join("d.png");
    io::write_depth(&path, DepthFormat::Png16, &depth, &k).unwrap();
    let back = io::read_depth(&path, DepthFormat::from_path(&path).unwrap(), &k).unwrap();
    for (a, b) in back.values().iter().zip(depth.values()) {
        assert!((a - b).abs() <= 0.5 * k.depth_scale + 1e-12);
    }
}

#[test]
fn png16_raw_value_scaling() {
    let d = DepthMap::new(2, 1, vec![5.0, 0.0], vec![true, false]).unwrap();
    let bytes = png16::encode_depth(&d, 0.001).unwrap();
    let back = png16::decode_depth(&bytes, 0.001).unwrap();
    assert_eq!(back.get(0, 0), Some(5.0));
    assert!(!back.is_valid(0, 1));
    let outdoor = png16::decode_depth(&bytes, 1.0 / 256.0).unwrap();
    assert_eq!(outdoor.get(0, 0), Some(5000.0 / 256.0));
}

#[test]
fn intrinsics_json_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let k = CameraIntrinsics::new(500.0, 510.0, 320.0, 240.0, 0.001).unwrap();
    io::write_intrinsics(&path, &k).unwrap();
    assert_eq!(io::read_intrinsics(&path).unwrap(), k);
    std::fs::write(&path, r#"{"fx":1,"fy":1,"u0":0,"v0":0,"depth_scale":1,"skew":0}"#).unwrap();
    assert!(io::read_intrinsics(&path).is_err());
    std::fs::write(&path, r#"{"fx":-1,"fy":1,"u0":0,"v0":0,"depth_scale":1}"#).unwrap();
    assert!(io::read_intrinsics(&path).is_err());
}

#[test]
fn missing_file_is_io_error() {
    let err = io::read_pfm(std::path::Path::new("/nonexistent/x.pfm")).unwrap_err();
    assert!(matches!(err, vnl::Error::Io(_)), "{err:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfm_round_trip_bit_exact(w in 1usize..12, h in 1usize..12, channels in prop::sample::select(vec![1usize, 3]), seed in any::<u64>()) {
        let mut g = vnl::rng::substream(seed, 0);
        let data: Vec<f32> = (0..w * h * channels).map(|_| f32::from_bits(vnl::rng::below(&mut g, 1 << 32) as u32)).map(|v| if v.is_nan() { 0.0 } else { v }).collect();
        let img = Pfm { width: w, height: h, channels, data };
        let back = Pfm::decode(&img.encode()).unwrap();
        prop_assert_eq!(back.width, w);
        prop_assert_eq!(back.height, h);
        let a: Vec<u32> = img.data.iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.data.iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pfm_depth_round_trip(seed in 0u64..1000) {
        let d = random_depth(7, 5, 0.1, 50.0, seed).map_valid(|_, v| v as f32 as f64).unwrap();
        prop_assert_eq!(pfm::decode_depth(&pfm::encode_depth(&d)).unwrap(), d);
    }
}
