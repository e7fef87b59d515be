#!/usr/bin/env python3
"""Teacher-forced trainer for the sequence-to-tree guidance model.

Input is the directory written by `treebeam prep` (vocab.txt plus
{train,dev}.enc.jsonl). Output is a weight archive, its `.vocab` sidecar and
a parity fixture with reference encoder states and logits for one dev task.

    python3 tools/train_seq2tree.py --data prep/ --out fixtures/model.nta
"""

import argparse
import json
import math
import random
import shutil
import struct
import sys
import time
import zlib
from pathlib import Path

import numpy as np
import torch

START_PARENT, START_SIBLING = 2, 3
GATES = ["Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh"]


def tensor_names():
    names = ["enc.E"]
    for cell in ["enc", "dec.p", "dec.s"]:
        names += [f"{cell}.{g}" for g in GATES]
    return names + ["dec.Wa", "dec.Wc", "dec.Up", "dec.Us", "dec.W"]


def shapes(v, h):
    out = {"enc.E": (v, h)}
    for cell in ["enc", "dec.p", "dec.s"]:
        for g in GATES:
            out[f"{cell}.{g}"] = (h,) if g.startswith("b") else (h, h)
    out.update({"dec.Wa": (h, h), "dec.Wc": (2 * h, h), "dec.Up": (h, h), "dec.Us": (h, h), "dec.W": (v, h)})
    return out


class Model(torch.nn.Module):
    def __init__(self, v, h, seed):
        super().__init__()
        g = torch.Generator().manual_seed(seed)
        self.h = h
        self.p = torch.nn.ParameterDict()
        for name, shape in shapes(v, h).items():
            if len(shape) == 1:
                init = torch.zeros(shape)
            else:
                bound = 1.0 / math.sqrt(shape[-1])
                init = (torch.rand(shape, generator=g) * 2 - 1) * bound
            self.p[name.replace(".", "_")] = torch.nn.Parameter(init)

    def w(self, name):
        return self.p[name.replace(".", "_")]

    def gru(self, cell, x, h):
        w = lambda g: self.w(f"{cell}.{g}")
        z = torch.sigmoid(x @ w("Wz") + h @ w("Uz") + w("bz"))
        r = torch.sigmoid(x @ w("Wr") + h @ w("Ur") + w("br"))
        c = torch.tanh(x @ w("Wh") + (r * h) @ w("Uh") + w("bh"))
        return (1 - z) * h + z * c

    def encode(self, src, lens):
        b, t = src.shape
        h = src.new_zeros((b, self.h), dtype=self.w("enc.E").dtype)
        states = []
        for i in range(t):
            nh = self.gru("enc", self.w("enc.E")[src[:, i]], h)
            keep = (i < lens).unsqueeze(1)
            h = torch.where(keep, nh, h)
            states.append(h)
        return torch.stack(states, 1), h

    def context(self, x, he, mask):
        q = x @ self.w("dec.Wa").T
        scores = torch.einsum("nth,nh->nt", he, q).masked_fill(~mask, float("-inf"))
        a = torch.softmax(scores, 1)
        r = torch.einsum("nt,nth->nh", a, he)
        return torch.tanh(torch.cat([r, x], 1) @ self.w("dec.Wc"))

    def forward(self, batch):
        """Logits for every gold node of the batch, in node order."""
        he, last = self.encode(batch["src"], batch["lens"])
        mask_all = torch.arange(he.shape[1]).unsqueeze(0) < batch["lens"].unsqueeze(1)
        n = len(batch["sym"])
        hp = he.new_zeros((n, self.h))
        hs = he.new_zeros((n, self.h))
        logits = he.new_zeros((n, self.w("dec.W").shape[0]))
        W = self.w("dec.W")
        for idx in batch["waves"]:
            task = batch["task"][idx]
            par = batch["parent"][idx]
            prv = batch["prev"][idx]
            has_p = par >= 0
            has_s = prv >= 0
            psym = torch.where(has_p, batch["sym"][par.clamp(min=0)], torch.full_like(par, START_PARENT))
            ssym = torch.where(has_s, batch["sym"][prv.clamp(min=0)], torch.full_like(prv, START_SIBLING))
            hp_in = torch.where(has_p.unsqueeze(1), hp[par.clamp(min=0)], last[task])
            hs_in = torch.where(has_s.unsqueeze(1), hs[prv.clamp(min=0)], torch.zeros_like(hp_in))
            he_n, mask_n = he[task], mask_all[task]
            hp_new = self.gru("dec.p", self.context(W[psym], he_n, mask_n), hp_in)
            hs_new = self.gru("dec.s", self.context(W[ssym], he_n, mask_n), hs_in)
            h = hp_new @ self.w("dec.Up").T + hs_new @ self.w("dec.Us").T
            hp = hp.index_copy(0, idx, hp_new)
            hs = hs.index_copy(0, idx, hs_new)
            logits = logits.index_copy(0, idx, h @ W.T)
        return logits


def load_records(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def bind(ids, slots):
    return [slots[-x - 1] if x < 0 else x for x in ids]


def make_batch(recs, n_regular, n_ph, rng):
    """Pads sources, flattens trees and groups nodes into dependency waves.
    Each task gets a fresh random binding of its unknown tokens."""
    t = max(len(r["src"]) for r in recs)
    src = np.zeros((len(recs), t), dtype=np.int64)
    lens, sym, parent, prev, task, wave = [], [], [], [], [], []
    for b, r in enumerate(recs):
        slots = [n_regular + k for k in rng.sample(range(n_ph), n_ph)] if rng else [n_regular + k for k in range(n_ph)]
        s = bind(r["src"], slots)
        src[b, : len(s)] = s
        lens.append(len(s))
        base = len(sym)
        for i, (x, p, q) in enumerate(zip(bind(r["sym"], slots), r["parent"], r["prev"])):
            sym.append(x)
            parent.append(base + p if p >= 0 else -1)
            prev.append(base + q if q >= 0 else -1)
            task.append(b)
            wave.append(1 + max(wave[parent[-1]] if p >= 0 else 0, wave[prev[-1]] if q >= 0 else 0))
    wave = np.array(wave)
    waves = [torch.from_numpy(np.nonzero(wave == w)[0]) for w in range(1, wave.max() + 1)]
    as_t = lambda x: torch.tensor(x, dtype=torch.int64)
    return {
        "src": torch.from_numpy(src), "lens": as_t(lens), "sym": as_t(sym), "parent": as_t(parent),
        "prev": as_t(prev), "task": as_t(task), "waves": waves,
    }


def node_accuracy(model, recs, n_regular, n_ph, batch_size):
    right = total = 0
    with torch.no_grad():
        for i in range(0, len(recs), batch_size):
            batch = make_batch(recs[i : i + batch_size], n_regular, n_ph, None)
            pred = model(batch).argmax(1)
            right += int((pred == batch["sym"]).sum())
            total += len(batch["sym"])
    return right / max(total, 1)


def write_archive(path, tensors):
    out = bytearray(b"NTA1")
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors:
        arr = np.ascontiguousarray(arr, dtype="<f4")
        if not np.isfinite(arr).all():
            raise ValueError(f"tensor {name} holds a non-finite value")
        enc = name.encode()
        out += struct.pack("<H", len(enc)) + enc + struct.pack("<BB", 0, arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(out))


def export(model, path):
    tensors = [(n, model.w(n).detach().cpu().numpy()) for n in tensor_names()]
    write_archive(path, tensors)


def parity_fixture(model, rec, n_regular, n_ph):
    """Reference forward pass in float64 over the exported float32 weights."""
    ref = Model(1, model.h, 0).double()
    ref.p = torch.nn.ParameterDict({k: torch.nn.Parameter(v.detach().float().double()) for k, v in model.p.items()})
    batch = make_batch([rec], n_regular, n_ph, None)
    with torch.no_grad():
        _, last = ref.encode(batch["src"], batch["lens"])
        logits = ref(batch)
    return {
        "src": batch["src"][0].tolist(),
        "sym": batch["sym"].tolist(),
        "parent": batch["parent"].tolist(),
        "prev": batch["prev"].tolist(),
        "encoder_last": last[0].tolist(),
        "logits": logits.tolist(),
    }


def gradcheck(seed):
    torch.manual_seed(seed)
    model = Model(12, 3, seed).double()
    for p in model.parameters():
        p.data.uniform_(-0.5, 0.5)
    rec = {"src": [5, 6, -1, 7], "sym": [8, -1, 9], "parent": [-1, 0, 0], "prev": [-1, -1, 1]}
    batch = make_batch([rec], 10, 2, None)
    loss = lambda: torch.nn.functional.cross_entropy(model(batch), batch["sym"])
    params = list(model.parameters())
    grads = torch.autograd.grad(loss(), params)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.view(-1)
        for i in range(flat.numel()):
            old = flat[i].item()
            flat[i] = old + 1e-6
            up = loss().item()
            flat[i] = old - 1e-6
            down = loss().item()
            flat[i] = old
            num = (up - down) / 2e-6
            ana = g.view(-1)[i].item()
            worst = max(worst, abs(num - ana) / max(abs(num), abs(ana), 1e-3))
    print(f"gradient check: worst relative error {worst:.2e}")
    return worst < 1e-4


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", type=Path, required=False)
    ap.add_argument("--out", type=Path, default=Path("model.nta"))
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--clip", type=float, default=5.0)
    ap.add_argument("--patience", type=int, default=3)
    ap.add_argument("--limit", type=int, default=0, help="train on the first N tasks only")
    ap.add_argument("--dev-limit", type=int, default=0)
    ap.add_argument("--gradcheck", action="store_true")
    args = ap.parse_args()

    if args.gradcheck:
        return 0 if gradcheck(args.seed) else 1
    if args.data is None:
        ap.error("--data is required")

    torch.manual_seed(args.seed)
    rng = random.Random(args.seed)
    vocab = (args.data / "vocab.txt").read_text().split("\n")[:-1]
    n_ph = sum(1 for t in vocab if t.startswith("<ph"))
    n_regular = len(vocab) - n_ph
    train = load_records(args.data / "train.enc.jsonl")
    dev = load_records(args.data / "dev.enc.jsonl")
    if args.limit:
        train = train[: args.limit]
    if args.dev_limit:
        dev = dev[: args.dev_limit]
    model = Model(len(vocab), args.hidden, args.seed)
    opt = torch.optim.Adam(model.parameters(), lr=args.lr)
    print(f"vocabulary {len(vocab)} ({n_ph} placeholders), {len(train)} train, {len(dev)} dev, H={args.hidden}")

    best, stale = -1.0, 0
    best_state = None
    for epoch in range(1, args.epochs + 1):
        t0 = time.time()
        order = list(range(len(train)))
        rng.shuffle(order)
        total, nodes = 0.0, 0
        for i in range(0, len(order), args.batch):
            batch = make_batch([train[j] for j in order[i : i + args.batch]], n_regular, n_ph, rng)
            logits = model(batch)
            loss = torch.nn.functional.cross_entropy(logits, batch["sym"])
            if not torch.isfinite(loss):
                print(f"epoch {epoch}: loss diverged at batch {i // args.batch}", file=sys.stderr)
                return 2
            opt.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), args.clip)
            opt.step()
            total += loss.item() * len(batch["sym"])
            nodes += len(batch["sym"])
        acc = node_accuracy(model, dev, n_regular, n_ph, args.batch)
        print(f"epoch {epoch}: train loss {total / nodes:.4f}, dev node accuracy {acc:.4f} ({time.time() - t0:.0f}s)", flush=True)
        if acc > best:
            best, stale = acc, 0
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        else:
            stale += 1
            if stale >= args.patience:
                break
    model.load_state_dict(best_state)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    export(model, args.out)
    shutil.copyfile(args.data / "vocab.txt", args.out.with_suffix(".vocab"))
    fixture = parity_fixture(model, dev[0], n_regular, n_ph)
    (args.out.parent / "parity.json").write_text(json.dumps(fixture))
    print(f"best dev node accuracy {best:.4f}; wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
