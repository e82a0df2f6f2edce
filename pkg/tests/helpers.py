import numpy as np

from eddy_ddm.modal_analysis import amplification_arrays, modal_table


def eigen_consistency_error(state, swept, phys, imp):
    """Largest error of one homogeneous sweep against (t_c, t_i) multiplication.

    Errors are measured against the magnitude of the summands in each factor's
    numerator, since t_c and t_i have isolated zeros (n beta ~ 1) where a
    pointwise relative error is meaningless.
    """
    n_max = state.g_C.size
    table = modal_table(n_max, phys)
    tc, ti, _, _ = amplification_arrays(table, phys, imp)
    root = table.root
    wmu = abs(phys.i_omega_mu)
    scale_c = wmu * (np.abs(table.B_I / root) + np.abs(imp.beta_C * root * table.A_I)) \
        / np.abs(table.A_I + imp.beta_I * table.B_I) * np.abs(state.g_I)
    A, B = table.A_C_scaled, table.B_C_scaled
    scale_i = (np.abs(B / root) + np.abs(imp.beta_I * root * A)) \
        / (wmu * np.abs(A + imp.beta_C * B)) * np.abs(state.g_C)
    err_c = np.abs(swept.g_C - tc * state.g_I) / scale_c
    err_i = np.abs(swept.g_I - ti * state.g_C) / scale_i
    return float(max(err_c.max(), err_i.max()))


def rel_dev(approx, exact):
    approx, exact = np.asarray(approx), np.asarray(exact)
    scale = np.abs(exact)
    return np.where(scale > 0, np.abs(approx - exact) / np.where(scale > 0, scale, 1), np.abs(approx))
