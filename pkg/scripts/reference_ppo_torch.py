"""Independent PyTorch PPO on gymnasium CartPole-v1, for comparing baseline solve rates.

Mirrors the CleanRL single-file PPO with one environment and the same
hyperparameters as ``PPOConfig``. Needs the ``reference`` extra plus torch::

    python scripts/reference_ppo_torch.py --seeds 0-9 [--no-clip-vloss] [--vf-coef 0.5]
"""

from __future__ import annotations

import argparse
import random

import gymnasium as gym
import numpy as np
import torch
import torch.nn as nn
from torch.distributions.categorical import Categorical


def layer_init(layer, std=np.sqrt(2), bias_const=0.0):
    torch.nn.init.orthogonal_(layer.weight, std)
    torch.nn.init.constant_(layer.bias, bias_const)
    return layer


class Agent(nn.Module):
    def __init__(self):
        super().__init__()
        self.critic = nn.Sequential(layer_init(nn.Linear(4, 64)), nn.Tanh(),
                                    layer_init(nn.Linear(64, 64)), nn.Tanh(),
                                    layer_init(nn.Linear(64, 1), std=1.0))
        self.actor = nn.Sequential(layer_init(nn.Linear(4, 64)), nn.Tanh(),
                                   layer_init(nn.Linear(64, 64)), nn.Tanh(),
                                   layer_init(nn.Linear(64, 2), std=0.01))

    def get_value(self, x):
        return self.critic(x)

    def get_action_and_value(self, x, action=None):
        probs = Categorical(logits=self.actor(x))
        if action is None:
            action = probs.sample()
        return action, probs.log_prob(action), probs.entropy(), self.critic(x)


def run(seed, total_steps=100_000, num_steps=128, epochs=4, minibatches=4, gamma=0.99,
        lam=0.95, clip=0.2, clip_vloss=True, vf_coef=0.5, ent_coef=0.01, lr=2.5e-4,
        max_grad_norm=0.5):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.backends.cudnn.deterministic = True
    env = gym.wrappers.RecordEpisodeStatistics(gym.make("CartPole-v1"))
    agent = Agent()
    opt = torch.optim.Adam(agent.parameters(), lr=lr, eps=1e-5)
    obs_buf = torch.zeros((num_steps, 4))
    act_buf = torch.zeros(num_steps)
    logp_buf = torch.zeros(num_steps)
    rew_buf = torch.zeros(num_steps)
    done_buf = torch.zeros(num_steps)
    val_buf = torch.zeros(num_steps)
    returns_log = []
    next_obs = torch.tensor(env.reset(seed=seed)[0], dtype=torch.float32)
    next_done = torch.zeros(())
    num_updates = total_steps // num_steps
    mb = num_steps // minibatches
    for update in range(1, num_updates + 1):
        for g in opt.param_groups:
            g["lr"] = (1.0 - (update - 1.0) / num_updates) * lr
        for t in range(num_steps):
            obs_buf[t] = next_obs
            done_buf[t] = next_done
            with torch.no_grad():
                a, logp, _, v = agent.get_action_and_value(next_obs)
            val_buf[t] = v.flatten()[0]
            act_buf[t] = a
            logp_buf[t] = logp
            o, r, term, trunc, info = env.step(int(a))
            rew_buf[t] = r
            next_done = torch.tensor(float(term or trunc))
            if term or trunc:
                returns_log.append(float(info["episode"]["r"]))
                o, _ = env.reset()
            next_obs = torch.tensor(o, dtype=torch.float32)
        with torch.no_grad():
            next_value = agent.get_value(next_obs).reshape(())
            adv = torch.zeros(num_steps)
            last = 0.0
            for t in reversed(range(num_steps)):
                if t == num_steps - 1:
                    nonterm, nv = 1.0 - next_done, next_value
                else:
                    nonterm, nv = 1.0 - done_buf[t + 1], val_buf[t + 1]
                delta = rew_buf[t] + gamma * nv * nonterm - val_buf[t]
                adv[t] = last = delta + gamma * lam * nonterm * last
            ret = adv + val_buf
        idx = np.arange(num_steps)
        for _ in range(epochs):
            np.random.shuffle(idx)
            for start in range(0, num_steps, mb):
                i = idx[start:start + mb]
                _, newlogp, ent, newv = agent.get_action_and_value(obs_buf[i], act_buf.long()[i])
                ratio = (newlogp - logp_buf[i]).exp()
                a_mb = adv[i]
                a_mb = (a_mb - a_mb.mean()) / (a_mb.std() + 1e-8)
                pg = torch.max(-a_mb * ratio, -a_mb * torch.clamp(ratio, 1 - clip, 1 + clip)).mean()
                newv = newv.view(-1)
                if clip_vloss:
                    unclipped = (newv - ret[i]) ** 2
                    vclip = val_buf[i] + torch.clamp(newv - val_buf[i], -clip, clip)
                    vloss = 0.5 * torch.max(unclipped, (vclip - ret[i]) ** 2).mean()
                else:
                    vloss = 0.5 * ((newv - ret[i]) ** 2).mean()
                loss = pg - ent_coef * ent.mean() + vf_coef * vloss
                opt.zero_grad()
                loss.backward()
                nn.utils.clip_grad_norm_(agent.parameters(), max_grad_norm)
                opt.step()
    return returns_log


def parse_seeds(text):
    if "-" in text:
        a, b = text.split("-")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=parse_seeds, default=list(range(10)))
    ap.add_argument("--no-clip-vloss", action="store_true")
    ap.add_argument("--vf-coef", type=float, default=0.5)
    args = ap.parse_args()
    torch.set_num_threads(1)
    solved = 0
    for s in args.seeds:
        rets = run(s, clip_vloss=not args.no_clip_vloss, vf_coef=args.vf_coef)
        last10 = float(np.mean(rets[-10:]))
        solved += last10 >= 475
        print(f"seed {s}: episodes={len(rets)} last10={last10:.1f}", flush=True)
    print(f"solved {solved}/{len(args.seeds)}")


if __name__ == "__main__":
    main()
