"""Regenerates kdd_workload.json and ids_model.bin.

Runs a small intrusion-detection training job on synthetic KDD-99-style
connection records and writes what each workflow step would report.
The outputs are committed; the benchmark never runs this script.

    python3 gen_kdd_workload.py
"""

import hashlib
import json
import pathlib

import numpy as np

SEED = 1999
HERE = pathlib.Path(__file__).parent

FEATURES = [
    ("duration", "c"), ("protocol_type", "s"), ("service", "s"), ("flag", "s"),
    ("src_bytes", "c"), ("dst_bytes", "c"), ("land", "b"), ("wrong_fragment", "c"),
    ("urgent", "c"), ("hot", "c"), ("num_failed_logins", "c"), ("logged_in", "b"),
    ("num_compromised", "c"), ("root_shell", "b"), ("su_attempted", "b"),
    ("num_root", "c"), ("num_file_creations", "c"), ("num_shells", "c"),
    ("num_access_files", "c"), ("num_outbound_cmds", "c"), ("is_host_login", "b"),
    ("is_guest_login", "b"), ("count", "c"), ("srv_count", "c"),
    ("serror_rate", "r"), ("srv_serror_rate", "r"), ("rerror_rate", "r"),
    ("srv_rerror_rate", "r"), ("same_srv_rate", "r"), ("diff_srv_rate", "r"),
    ("srv_diff_host_rate", "r"), ("dst_host_count", "c"), ("dst_host_srv_count", "c"),
    ("dst_host_same_srv_rate", "r"), ("dst_host_diff_srv_rate", "r"),
    ("dst_host_same_src_port_rate", "r"), ("dst_host_srv_diff_host_rate", "r"),
    ("dst_host_serror_rate", "r"), ("dst_host_srv_serror_rate", "r"),
    ("dst_host_rerror_rate", "r"), ("dst_host_srv_rerror_rate", "r"),
]
CLASSES = ["normal", "dos", "probe", "r2l", "u2r"]
PRIORS = [0.6, 0.3, 0.07, 0.025, 0.005]
PROTOCOLS = ["tcp", "udp", "icmp"]
SERVICES = ["http", "smtp", "ftp_data", "private", "ecr_i", "domain_u", "other"]
FLAGS = ["SF", "S0", "REJ", "RSTR"]


def synth(rng, n):
    y = rng.choice(len(CLASSES), size=n, p=PRIORS)
    cols = {}
    for name, kind in FEATURES:
        if kind == "s":
            pool = {"protocol_type": PROTOCOLS, "service": SERVICES, "flag": FLAGS}[name]
            skew = rng.dirichlet(np.ones(len(pool)), size=len(CLASSES))
            cols[name] = np.array([rng.choice(len(pool), p=skew[c]) for c in y])
        elif kind == "b":
            p = rng.uniform(0.0, 0.4, size=len(CLASSES))
            cols[name] = (rng.uniform(size=n) < p[y]).astype(float)
        elif kind == "r":
            a = rng.uniform(0.5, 4.0, size=len(CLASSES))
            cols[name] = rng.beta(a[y], 2.0)
        else:
            scale = rng.uniform(1.0, 800.0, size=len(CLASSES))
            cols[name] = np.floor(rng.exponential(scale[y]))
    # Constant column, as in the original data.
    cols["num_outbound_cmds"] = np.zeros(n)
    return cols, y


def design(cols):
    parts, names = [], []
    for name, kind in FEATURES:
        if kind == "s":
            pool = {"protocol_type": PROTOCOLS, "service": SERVICES, "flag": FLAGS}[name]
            for i, v in enumerate(pool):
                parts.append((cols[name] == i).astype(float))
                names.append(f"{name}={v}")
        else:
            parts.append(cols[name])
            names.append(name)
    return np.stack(parts, axis=1), names


def train(x, y, epochs, lr, l2, rng):
    w = np.zeros((x.shape[1], len(CLASSES)))
    b = np.zeros(len(CLASSES))
    onehot = np.eye(len(CLASSES))[y]
    losses = []
    for _ in range(epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), 128):
            idx = order[start:start + 128]
            z = x[idx] @ w + b
            z -= z.max(axis=1, keepdims=True)
            p = np.exp(z)
            p /= p.sum(axis=1, keepdims=True)
            g = p - onehot[idx]
            w -= lr * (x[idx].T @ g / len(idx) + l2 * w)
            b -= lr * g.mean(axis=0)
        z = x @ w + b
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        losses.append(float(-np.log(p[np.arange(len(y)), y] + 1e-12).mean()))
    return w, b, losses


def scores(w, b, x, y):
    pred = (x @ w + b).argmax(axis=1)
    acc = float((pred == y).mean())
    conf = np.zeros((len(CLASSES), len(CLASSES)), dtype=int)
    for t, p in zip(y, pred):
        conf[t, p] += 1
    recall = [float(conf[c, c] / max(conf[c].sum(), 1)) for c in range(len(CLASSES))]
    return acc, recall, conf


def content_id(blob):
    return f"{hashlib.sha256(blob).hexdigest()}:{len(blob)}"


def r4(v):
    return round(float(v), 4)


def main():
    rng = np.random.default_rng(SEED)
    n = 6000
    cols, y = synth(rng, n)
    counts = {c: int((y == i).sum()) for i, c in enumerate(CLASSES)}

    raw = "\n".join(",".join(str(int(cols[f][i])) if k != "r" else f"{cols[f][i]:.2f}"
                             for f, k in FEATURES) + f",{CLASSES[y[i]]}" for i in range(n))
    raw_id = content_id(raw.encode())

    x, names = design(cols)
    keep = [i for i in range(x.shape[1]) if x[:, i].std() > 0]
    dropped = [names[i] for i in range(x.shape[1]) if i not in keep]
    x, names = x[:, keep], [names[i] for i in keep]
    lo, hi = x.min(axis=0), x.max(axis=0)
    x = (x - lo) / np.where(hi > lo, hi - lo, 1.0)

    split = rng.permutation(n)
    n_train, n_test = int(0.7 * n), int(0.15 * n)
    tr, te, va = split[:n_train], split[n_train:n_train + n_test], split[n_train + n_test:]

    # Rank by absolute correlation with the normal/attack split.
    target = (y[tr] != 0).astype(float)
    corr = np.nan_to_num([abs(np.corrcoef(x[tr, i], target)[0, 1]) for i in range(x.shape[1])])
    top = list(np.argsort(corr)[::-1][:12])
    xs = x[:, top]

    epochs, lr, l2 = 12, 0.5, 1e-4
    w, b, losses = train(xs[tr], y[tr], epochs, lr, l2, rng)
    acc_te, recall_te, _ = scores(w, b, xs[te], y[te])
    acc_va, _, conf_va = scores(w, b, xs[va], y[va])
    model_bin = np.concatenate([w.ravel(), b]).astype("<f4").tobytes()
    model_id = content_id(model_bin)
    (HERE / "ids_model.bin").write_bytes(model_bin)

    feature_list = ", ".join(f"{f}:{k}" for f, k in FEATURES)
    ops = [
        {
            "label": "D1",
            "kind": "register_dataset",
            "metadata": {
                "name": "kdd99-10pct-raw",
                "version": "1.0",
                "description": (
                    f"Network connection records in KDD Cup 1999 layout, {n} rows, "
                    f"{len(FEATURES)} features plus label. Classes: "
                    + ", ".join(f"{c}={v}" for c, v in counts.items())
                    + f". Raw CSV {raw_id}. Collected from simulated traffic on a "
                    "segmented test network; one row per connection. Columns (c=count, s=symbol, b=flag, "
                    f"r=rate): {feature_list}."
                ),
            },
        },
        {
            "label": "D2",
            "kind": "register_dataset",
            "ancestor": "$D1",
            "metadata": {
                "name": "kdd99-10pct-clean",
                "version": "1.0",
                "description": (
                    f"Derived from kdd99-10pct-raw. One-hot protocol_type, service, flag; "
                    f"constant columns dropped ({', '.join(dropped)}); min-max scaled to [0,1]. "
                    f"Scaling bounds fit on all rows. {len(names)} columns: " + ", ".join(names) + "."
                ),
            },
        },
        {
            "label": "ML1",
            "kind": "register_model",
            "metadata": {
                "name": "ids-softmax",
                "version": "1.0",
                "description": (
                    "Multinomial logistic regression that labels a connection record as "
                    + ", ".join(CLASSES)
                    + ". Trained by mini-batch SGD on kdd99-10pct-clean using the top "
                    f"{len(top)} columns by correlation with the attack indicator. "
                    "Intended for offline triage of flow logs; not tuned for u2r or r2l recall, "
                    "which have few examples. Input: min-max scaled feature vector in the "
                    "column order recorded at feature engineering. Output: class scores; "
                    "argmax is the label. Weights ship as little-endian f32, row-major "
                    f"[{len(top)}x{len(CLASSES)}] followed by {len(CLASSES)} biases. "
                    "Owner team: network analytics. Review: security engineering. "
                    "Every lifecycle step is recorded in the provenance ledger with its "
                    "inputs, outputs and parameters; the published artifact is anchored by "
                    "hash so deployed copies can be checked against the ledger before use. "
                    "Retraining cadence: monthly, or when the validation accuracy falls by "
                    "more than two points. Known limitations: synthetic traffic mix, no "
                    "temporal features, and no calibration of scores. Evaluation protocol: "
                    "accuracy and per-class recall on a 15% test split, then accuracy and the "
                    "full confusion matrix on a separate 15% validation split; deployment is "
                    "blocked unless validation accuracy reaches the threshold recorded at the "
                    "validation step. Contact the owner team before reusing the weights for "
                    "other traffic sources."
                ),
            },
        },
        {
            "label": "ML2-1",
            "kind": "record_activity",
            "activity": "select_data",
            "payload": {
                "inputs": {"dataset": "$D2"},
                "outputs": {"train_rows": len(tr), "test_rows": len(te), "validation_rows": len(va)},
                "params": {"split": "70/15/15", "seed": SEED, "stratify": "none"},
            },
        },
        {
            "label": "ML2-2",
            "kind": "record_activity",
            "activity": "preprocess_data",
            "payload": {
                "inputs": {"dataset": "$D2"},
                "outputs": {"columns": len(names)},
                "params": {"scaling": "minmax", "one_hot": "protocol_type,service,flag",
                           "dropped": ",".join(dropped), "fit_on": "train"},
            },
        },
        {
            "label": "ML2-3",
            "kind": "record_activity",
            "activity": "engineer_features",
            "payload": {
                "inputs": {"dataset": "$D2"},
                "outputs": {"selected": ",".join(names[i] for i in top)},
                "params": {"method": "pearson", "k": len(top)},
            },
        },
        {
            "label": "ML2-4",
            "kind": "record_activity",
            "activity": "train",
            "payload": {
                "inputs": {"dataset": "$D2"},
                "outputs": {"weights": model_id, "final_loss": r4(losses[-1])},
                "params": {"optimizer": "sgd", "learning_rate": lr, "epochs": epochs,
                           "batch": 128, "l2": l2},
            },
        },
        {
            "label": "ML2-5",
            "kind": "record_activity",
            "activity": "evaluate",
            "payload": {
                "inputs": {"weights": model_id},
                "outputs": {"accuracy": r4(acc_te),
                            "recall": ",".join(f"{c}={r4(r)}" for c, r in zip(CLASSES, recall_te))},
                "params": {"split": "test"},
            },
        },
        {
            "label": "ML2-6",
            "kind": "record_activity",
            "activity": "validate",
            "payload": {
                "inputs": {"weights": model_id},
                "outputs": {"accuracy": r4(acc_va),
                            "confusion": ";".join(",".join(str(v) for v in row) for row in conf_va)},
                "params": {"split": "validation", "min_accuracy": 0.9},
            },
        },
        {
            "label": "ML2-7",
            "kind": "record_activity",
            "activity": "deploy",
            "payload": {
                "inputs": {"weights": model_id},
                "outputs": {"artifact": model_id},
                "params": {"target": "batch-scoring", "format": "f32le", "replicas": 2},
            },
        },
    ]
    for op in ops:
        if op["kind"] == "record_activity":
            op["asset"] = "$ML1"
    doc = {"generator": "gen_kdd_workload.py", "seed": SEED, "ops": ops}
    (HERE / "kdd_workload.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
