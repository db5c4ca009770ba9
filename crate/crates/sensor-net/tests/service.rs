use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::thread;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rbv_core::data::{generate_synthetic, AttractorSpec, Dataset};
use rbv_core::hgb::{train_hgb, HgbParams};
use rbv_sensor_net::service::CloudService;
use rbv_sensor_net::{serve_cloud, ModelTag, ServiceRequest, ServiceResponse};

fn dataset() -> Dataset {
    generate_synthetic(&AttractorSpec::cruciform(8), 60, 1).unwrap()
}

fn service() -> (CloudService, Dataset) {
    let d = dataset();
    let params = HgbParams {
        trees: 20,
        ..Default::default()
    };
    let m = train_hgb(&d, &params).unwrap();
    (serve_cloud(m, "127.0.0.1:0").unwrap(), d)
}

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    fn connect(addr: SocketAddr) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
        Self {
            writer: s.try_clone().unwrap(),
            reader: BufReader::new(s),
        }
    }

    fn send(&mut self, raw: &str) -> String {
        self.writer.write_all(raw.as_bytes()).unwrap();
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        line
    }

    fn predict(&mut self, values: &[f64]) -> ServiceResponse {
        let line = self.send(&ServiceRequest::new(values.to_vec()).encode());
        ServiceResponse::parse(line.trim_end()).unwrap()
    }
}

#[test]
fn answers_are_independent_of_request_order() {
    let (svc, d) = service();
    let requests: Vec<Vec<f64>> = d.records().iter().take(40).map(|r| r.values.clone()).collect();
    let mut client = Client::connect(svc.local_addr());
    let baseline: Vec<ServiceResponse> = requests.iter().map(|v| client.predict(v)).collect();
    assert!(baseline.iter().all(|r| r.tag == ModelTag::CloudHgb));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let mut order: Vec<usize> = (0..requests.len()).collect();
        order.shuffle(&mut rng);
        let mut fresh = Client::connect(svc.local_addr());
        for i in order {
            assert_eq!(fresh.predict(&requests[i]), baseline[i]);
        }
    }
    svc.shutdown();
}

#[test]
fn stalled_client_does_not_block_others() {
    let (svc, d) = service();
    let addr = svc.local_addr();
    // header sent, values never arrive
    let mut stalled = TcpStream::connect(addr).unwrap();
    stalled.write_all(b"PREDICT v1 n=8\n0.5,").unwrap();

    let handles: Vec<_> = (0..8)
        .map(|t| {
            let values: Vec<Vec<f64>> = d
                .records()
                .iter()
                .skip(t * 5)
                .take(5)
                .map(|r| r.values.clone())
                .collect();
            thread::spawn(move || {
                let mut c = Client::connect(addr);
                values.iter().map(|v| c.predict(v).class).collect::<Vec<_>>()
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap().len(), 5);
    }
    drop(stalled);
    svc.shutdown();
}

#[test]
fn errors_leave_connection_usable() {
    let (svc, d) = service();
    let mut c = Client::connect(svc.local_addr());
    assert_eq!(c.send("HELLO\n"), "ERR PROTO unknown-verb\n");
    assert_eq!(c.send("PREDICT v1 n=3\n1,2\n"), "ERR ARITY expected=3 got=2\n");
    assert_eq!(c.send("PREDICT v1 n=2\n1,2\n"), "ERR ARITY expected=8 got=2\n");
    assert!(c.send("PREDICT v1 n=2\n1,abc\n").starts_with("ERR VALUE"));
    let r = c.predict(&d.records()[0].values);
    assert_eq!(r.tag, ModelTag::CloudHgb);
    svc.shutdown();
}
