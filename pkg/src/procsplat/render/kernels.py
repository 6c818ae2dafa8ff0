"""Numba kernels for tile rasterization.

Single-threaded by design: the host runs renders inside worker processes, so
thread-level parallelism here would only fight the process scheduler. All
accumulation is float64; gradients therefore need no atomics.

Semantics shared by forward and backward:
  - a Gaussian touches a pixel only inside its 3-sigma conic ellipse,
  - contributions below sigma_min are skipped,
  - per-splat opacity saturates at sigma_max,
  - a pixel stops compositing once transmittance drops below t_eps.
"""
import numpy as np
from numba import njit

CUTOFF_MAHA_SQ = 9.0  # (3 sigma)^2 hard footprint edge


@njit(cache=True)
def forward_kernel(tile_offsets, sorted_ids, rects, mean2d, conic, color, alpha,
                   height, width, tile_size, n_tiles_x, bg,
                   sigma_min, sigma_max, t_eps,
                   image, alpha_img, final_t, n_contrib):
    n_tiles = tile_offsets.shape[0] - 1
    for tile in range(n_tiles):
        tx0 = (tile % n_tiles_x) * tile_size
        ty0 = (tile // n_tiles_x) * tile_size
        tx1 = min(tx0 + tile_size, width)
        ty1 = min(ty0 + tile_size, height)
        th = ty1 - ty0
        tw = tx1 - tx0
        if th <= 0 or tw <= 0:
            continue
        trans = np.ones((th, tw))
        acc = np.zeros((th, tw, 3))
        done = np.zeros((th, tw), dtype=np.uint8)
        n_active = th * tw
        for pos in range(tile_offsets[tile], tile_offsets[tile + 1]):
            if n_active == 0:
                break
            e = sorted_ids[pos]
            x0 = max(rects[e, 0], tx0)
            y0 = max(rects[e, 1], ty0)
            x1 = min(rects[e, 2], tx1)
            y1 = min(rects[e, 3], ty1)
            mx = mean2d[e, 0]
            my = mean2d[e, 1]
            ca = conic[e, 0]
            cb = conic[e, 1]
            cc = conic[e, 2]
            a_e = alpha[e]
            for py in range(y0, y1):
                ly = py - ty0
                for px in range(x0, x1):
                    lx = px - tx0
                    if done[ly, lx]:
                        continue
                    dx = px + 0.5 - mx
                    dy = py + 0.5 - my
                    maha = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy
                    if maha > CUTOFF_MAHA_SQ or maha < 0.0:
                        continue
                    sigma = a_e * np.exp(-0.5 * maha)
                    if sigma < sigma_min:
                        continue
                    if sigma > sigma_max:
                        sigma = sigma_max
                    t = trans[ly, lx]
                    w = sigma * t
                    acc[ly, lx, 0] += w * color[e, 0]
                    acc[ly, lx, 1] += w * color[e, 1]
                    acc[ly, lx, 2] += w * color[e, 2]
                    t *= 1.0 - sigma
                    trans[ly, lx] = t
                    n_contrib[py, px] = pos - tile_offsets[tile] + 1
                    if t < t_eps:
                        done[ly, lx] = 1
                        n_active -= 1
        for ly in range(th):
            for lx in range(tw):
                t = trans[ly, lx]
                image[ty0 + ly, tx0 + lx, 0] = acc[ly, lx, 0] + bg[0] * t
                image[ty0 + ly, tx0 + lx, 1] = acc[ly, lx, 1] + bg[1] * t
                image[ty0 + ly, tx0 + lx, 2] = acc[ly, lx, 2] + bg[2] * t
                alpha_img[ty0 + ly, tx0 + lx] = 1.0 - t
                final_t[ty0 + ly, tx0 + lx] = t


@njit(cache=True)
def backward_kernel(tile_offsets, sorted_ids, rects, mean2d, conic, color, alpha,
                    height, width, tile_size, n_tiles_x, bg,
                    sigma_min, sigma_max,
                    final_t, n_contrib, grad_image,
                    g_mean2d, g_conic, g_color, g_alpha):
    n_tiles = tile_offsets.shape[0] - 1
    for tile in range(n_tiles):
        tx0 = (tile % n_tiles_x) * tile_size
        ty0 = (tile // n_tiles_x) * tile_size
        tx1 = min(tx0 + tile_size, width)
        ty1 = min(ty0 + tile_size, height)
        base = tile_offsets[tile]
        for py in range(ty0, ty1):
            for px in range(tx0, tx1):
                last = n_contrib[py, px]
                if last == 0:
                    continue
                gr = grad_image[py, px, 0]
                gg = grad_image[py, px, 1]
                gb = grad_image[py, px, 2]
                if gr == 0.0 and gg == 0.0 and gb == 0.0:
                    continue
                t_run = final_t[py, px]
                # suffix blend: colors composited behind the current splat
                s0 = bg[0] * t_run
                s1 = bg[1] * t_run
                s2 = bg[2] * t_run
                for pos in range(base + last - 1, base - 1, -1):
                    e = sorted_ids[pos]
                    if (px < rects[e, 0] or px >= rects[e, 2]
                            or py < rects[e, 1] or py >= rects[e, 3]):
                        continue
                    mx = mean2d[e, 0]
                    my = mean2d[e, 1]
                    dx = px + 0.5 - mx
                    dy = py + 0.5 - my
                    ca = conic[e, 0]
                    cb = conic[e, 1]
                    cc = conic[e, 2]
                    maha = ca * dx * dx + 2.0 * cb * dx * dy + cc * dy * dy
                    if maha > CUTOFF_MAHA_SQ or maha < 0.0:
                        continue
                    g_val = np.exp(-0.5 * maha)
                    raw = alpha[e] * g_val
                    if raw < sigma_min:
                        continue
                    capped = raw > sigma_max
                    sigma = sigma_max if capped else raw
                    one_m = 1.0 - sigma
                    t_before = t_run / one_m
                    w = sigma * t_before
                    g_color[e, 0] += gr * w
                    g_color[e, 1] += gg * w
                    g_color[e, 2] += gb * w
                    d_sigma = (gr * (color[e, 0] * t_before - s0 / one_m)
                               + gg * (color[e, 1] * t_before - s1 / one_m)
                               + gb * (color[e, 2] * t_before - s2 / one_m))
                    s0 += color[e, 0] * w
                    s1 += color[e, 1] * w
                    s2 += color[e, 2] * w
                    t_run = t_before
                    if capped:
                        continue
                    g_alpha[e] += d_sigma * g_val
                    d_power = d_sigma * sigma
                    g_conic[e, 0] += d_power * (-0.5 * dx * dx)
                    g_conic[e, 1] += d_power * (-dx * dy)
                    g_conic[e, 2] += d_power * (-0.5 * dy * dy)
                    g_mean2d[e, 0] += d_power * (ca * dx + cb * dy)
                    g_mean2d[e, 1] += d_power * (cb * dx + cc * dy)
