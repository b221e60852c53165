"""Training loop: Adam with weight decay, step LR schedule, batch mixing.

One optimization step draws a physics batch from the shuffled physics set
(paired + virtual inputs) and, when supervision is enabled, a paired batch
round-robin; the total objective combines the data term on the paired batch
with physics terms on both. The purely data-driven baseline regime is the
same loop with the physics weights zeroed and no virtual inputs, which
keeps parameter counts and the model spec identical between regimes.

Everything is deterministic given (config, seeds, dataset): the epoch
shuffles come from one Generator seeded by config.seed, and training state
(parameters, Adam moments, RNG state, round-robin cursor) checkpoints and
resumes bit-exactly.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .autodiff import backward
from .benchmarks import build_batch
from .bench.metrics import relative_l2
from .operator.model import build_model, load_checkpoint, save_checkpoint
from .physics import LossWeights, TcwSchedule, predict, total_loss


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, message):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    base_lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    weight_decay: float = 1e-4
    lr_step: int = 100
    lr_factor: float = 0.5
    batch_size: int = 25
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    schedule: TcwSchedule = field(default_factory=lambda: TcwSchedule("none"))
    val_every: int = 10

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.base_lr <= 0:
            raise ValueError("epochs >= 1, batch_size >= 1, base_lr > 0 required")

    def data_only(self):
        """Baseline regime: physics terms off (identical model spec)."""
        return TrainConfig(self.epochs, self.base_lr, self.betas,
                           self.weight_decay, self.lr_step, self.lr_factor,
                           self.batch_size, self.seed,
                           LossWeights(self.weights.lam_data, 0.0, 0.0, 0.0),
                           TcwSchedule("none"), self.val_every)


def lr_at(epoch, base_lr, step=100, factor=0.5):
    """Step schedule: base_lr * factor ** floor(epoch / step)."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return base_lr * factor ** (epoch // step)


def init_params(config, seed):
    """Model with Glorot-normal affine weights, zero biases, stable poles."""
    return build_model(config, seed=seed)


# ---------------------------------------------------------------------------
# Adam


def adam_init(params):
    return {"step": 0,
            "m": [np.zeros_like(p.data) for p in params],
            "v": [np.zeros_like(p.data) for p in params]}


def adam_step(params, grads, state, lr, betas=(0.9, 0.999), weight_decay=1e-4,
              eps=1e-8):
    """In-place Adam update; weight decay enters the gradient (classic L2)."""
    b1, b2 = betas
    state["step"] += 1
    t = state["step"]
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for i, p in enumerate(params):
        g = grads[i]
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged(-1, f"non-finite gradient in {p.name}")
        if weight_decay:
            g = g + weight_decay * p.data
        m = state["m"][i]
        v = state["v"][i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return state


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainHistory:
    rows: list = field(default_factory=list)

    def append(self, **row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path):
        keys = ["epoch", "lr", "data", "pde", "ic", "bc", "pde_virtual",
                "ic_virtual", "bc_virtual", "total", "val_rel_l2", "seconds"]
        with open(path, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for row in self.rows:
                fh.write(",".join(
                    "" if row.get(k) is None else repr(row.get(k, ""))
                    for k in keys) + "\n")


def evaluate(model, bench, samples, chunk=50):
    """Mean relative L2 and per-case errors on labelled samples."""
    errs = []
    for lo in range(0, len(samples), chunk):
        part = samples[lo:lo + chunk]
        preds = predict(model, bench, part)
        for p, s in zip(preds, part):
            ref = s.aux.get("label_colloc", s.label)
            errs.append(relative_l2(p, ref))
    return float(np.mean(errs)), errs


def train_run(bench, model, config, paired, virtual=(), val_samples=None,
              resume_state=None):
    """Run the mixing loop; returns (model, TrainHistory, final state).

    paired may be empty only when the data weight is zero. Divergence
    (non-finite loss or gradients) aborts with the last finished epoch's
    parameters restored.
    """
    paired = list(paired)
    virtual = list(virtual)
    use_data = config.weights.lam_data > 0
    if use_data and not paired:
        raise ValueError("data term enabled but no paired samples given")
    physics_set = paired + virtual
    if not physics_set:
        raise ValueError("empty physics set")

    params = model.parameters()
    if resume_state is None:
        rng = np.random.default_rng(config.seed)
        opt = adam_init(params)
        start_epoch = 0
        cursor = 0
    else:
        rng = np.random.default_rng()
        rng.bit_generator.state = resume_state["rng"]
        opt = resume_state["opt"]
        start_epoch = resume_state["epoch"]
        cursor = resume_state["cursor"]

    history = TrainHistory()
    last_good = [p.data.copy() for p in params]
    bs = config.batch_size

    for epoch in range(start_epoch, config.epochs):
        t0 = time.perf_counter()
        lr = lr_at(epoch, config.base_lr, config.lr_step, config.lr_factor)
        order = rng.permutation(len(physics_set))
        comps_sum = {}
        n_steps = 0
        try:
            for lo in range(0, len(order), bs):
                phys_samples = [physics_set[i] for i in order[lo:lo + bs]]
                phys_batch = build_batch(bench, phys_samples, with_labels=False)
                paired_batch = None
                if use_data:
                    take = [paired[(cursor + j) % len(paired)]
                            for j in range(min(bs, len(paired)))]
                    cursor = (cursor + len(take)) % len(paired)
                    paired_batch = build_batch(bench, take, with_labels=True)
                loss, comps = total_loss(model, paired_batch, phys_batch,
                                         config.weights, config.schedule)
                if not np.isfinite(loss.item()):
                    raise TrainingDiverged(epoch, "non-finite loss")
                grad_map = backward(loss, parameters=params)
                adam_step(params, [grad_map.get(p) for p in params], opt, lr,
                          config.betas, config.weight_decay)
                for k, c in comps.items():
                    comps_sum[k] = comps_sum.get(k, 0.0) + c
                n_steps += 1
        except TrainingDiverged as err:
            for p, saved in zip(params, last_good):
                p.data[...] = saved
            err.epoch = epoch
            raise
        last_good = [p.data.copy() for p in params]
        val_err = None
        if val_samples and ((epoch + 1) % config.val_every == 0
                            or epoch == config.epochs - 1):
            val_err, _ = evaluate(model, bench, val_samples)
        row = {k: v / max(n_steps, 1) for k, v in comps_sum.items()}
        history.append(epoch=epoch, lr=lr, val_rel_l2=val_err,
                       seconds=time.perf_counter() - t0, **row)
    state = {"rng": rng.bit_generator.state, "opt": opt,
             "epoch": config.epochs, "cursor": cursor}
    return model, history, state


# ---------------------------------------------------------------------------
# resumable checkpoints


def save_training_state(path, model, state):
    save_checkpoint(model, f"{path}.model.npz")
    np.savez(f"{path}.opt.npz",
             __meta__=np.array(json.dumps({
                 "epoch": state["epoch"], "cursor": state["cursor"],
                 "rng": state["rng"], "step": state["opt"]["step"]})),
             **{f"m{i}": m for i, m in enumerate(state["opt"]["m"])},
             **{f"v{i}": v for i, v in enumerate(state["opt"]["v"])})


def load_training_state(path):
    model = load_checkpoint(f"{path}.model.npz")
    with np.load(f"{path}.opt.npz", allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        n = len(model.parameters())
        opt = {"step": meta["step"],
               "m": [z[f"m{i}"] for i in range(n)],
               "v": [z[f"v{i}"] for i in range(n)]}
    state = {"rng": meta["rng"], "opt": opt, "epoch": meta["epoch"],
             "cursor": meta["cursor"]}
    return model, state
