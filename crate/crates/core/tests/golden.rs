use proml_core::codec::{Decode, Encode};
use proml_core::contracts::{calls, AssetMetadata};
use proml_core::crypto::Keypair;
use proml_core::ledger::{Call, Transaction, TransactionBuilder, UnsignedTransaction};
use proml_core::{Address, EncodingError};

fn golden(name: &str) -> Vec<u8> {
    let path = format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"));
    hex::decode(std::fs::read_to_string(path).unwrap().trim()).unwrap()
}

fn fixture() -> UnsignedTransaction {
    let metadata = AssetMetadata {
        name: "kdd-raw".into(),
        version: "1".into(),
        description: "KDD-99 network connection records".into(),
    };
    TransactionBuilder::new()
        .sender(Address([0x11; 20]))
        .nonce(0)
        .call(calls::register_dataset(metadata, None, None))
        .gas_limit(2_000_000)
        .build()
        .unwrap()
}

fn signed_fixture() -> Transaction {
    let body = fixture();
    let signature = Keypair::from_seed([7; 32]).sign(&body.encode_to_vec());
    Transaction { body, signature }
}

#[test]
fn fixture_encoding_matches_golden() {
    assert_eq!(fixture().encode_to_vec(), golden("fixture_tx.hex"));
}

#[test]
fn fixture_signed_encoding_and_id_match_golden() {
    let tx = signed_fixture();
    assert_eq!(tx.encode_to_vec(), golden("fixture_tx_signed.hex"));
    assert_eq!(tx.tx_id().0.to_vec(), golden("fixture_tx_id.hex"));
}

#[test]
fn golden_bytes_decode_back() {
    let tx = Transaction::decode_exact(&golden("fixture_tx_signed.hex")).unwrap();
    assert_eq!(tx, signed_fixture());
}

#[test]
fn empty_call_args_encode_as_zero_length() {
    let body = TransactionBuilder::new()
        .sender(Address([0x11; 20]))
        .nonce(0)
        .call(Call::new("m", Vec::new()))
        .gas_limit(0)
        .build()
        .unwrap();
    let bytes = body.encode_to_vec();
    // sender, nonce, target, method "m", then the args field.
    let args_at = (4 + 20) + 8 + 4 + (4 + 1);
    assert_eq!(&bytes[args_at..args_at + 4], &[0, 0, 0, 0]);
    assert_eq!(bytes.len(), args_at + 4 + 8);
}

#[test]
fn identical_transactions_encode_identically() {
    let a = signed_fixture();
    let b = signed_fixture();
    assert_eq!(a.encode_to_vec(), b.encode_to_vec());
    assert_eq!(a.tx_id(), b.tx_id());
}

#[test]
fn missing_field_is_an_encoding_error() {
    let err = TransactionBuilder::new()
        .sender(Address([0x11; 20]))
        .nonce(0)
        .gas_limit(1)
        .canonical_encode()
        .unwrap_err();
    assert_eq!(err, EncodingError::MissingField("call"));
}
