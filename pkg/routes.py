# nullwave/routes.py

import math
from pathlib import Path

import numpy as np
import pandas as pd

import reports
import schemas
from diagnostics import (fit_power_decay, fit_sqrt_exponential, region_volume, region_volume_exact,
                         sphere_cap_measure, weight_growth_check)
from exceptions import FitError
from fdtd3d import GridSpec, evolve, support_leak
from geoptics import (ComparisonODE, RayBundle, ansatz_residual, comparison_ode_check, frequencia_padrao,
                      integral_abscissa, null_vector, transport_defect, transport_solve)
from mode_solver import GoursatGrid, goursat_solve, nirenberg_blowup_scan, solve_modes
from notification_manager import add_notification
from nullform_algebra import check_condition_one, coupling_tensors, example_system, load_system_document
from profiles import WaveProfile, holder_half_seminorm
from renormalize import (GrowthRateEstimate, check_condition_two, growth_rate_estimate, linearized_coefficients,
                         liouville_residual, solve_renormalizer)

LIMITE_VOLUME = 100.0
FOLGA_MULTIPLICADOR = 1e-3


# --- Montagem do problema a partir do cenário ---

def construir_sistema(cenario):
    if isinstance(cenario.system, str):
        return example_system(cenario.system)
    return load_system_document(cenario.system.model_dump(), label=cenario.system.label)


def construir_perfil(cenario) -> WaveProfile:
    p = cenario.profile
    return WaveProfile(tuple(p.amplitudes), shape=p.shape, poly=tuple(p.poly), h_u=p.h_u)


def preparar(cenario):
    """Sistema, perfil, tensores, renormalizador e coeficientes B_y, B_z."""
    system = construir_sistema(cenario)
    profile = construir_perfil(cenario)
    couplings = coupling_tensors(system)
    ren = solve_renormalizer(system, profile, h=cenario.params.h, couplings=couplings)
    coeffs = linearized_coefficients(ren, couplings, profile)
    return system, profile, couplings, ren, coeffs


def _ajuste_ou_erro(funcao, *args, **kwargs):
    try:
        return funcao(*args, **kwargs)
    except FitError as erro:
        add_notification(f"Ajuste não realizado: {erro.detail}")
        return {"erro": erro.detail}


# --- Tarefa classify ---

def classify(cenario) -> dict:
    system, profile, couplings, ren, coeffs = preparar(cenario)
    params = cenario.params
    ativos = profile.active_components()
    condicao_1, violacoes = check_condition_one(system, ativos)
    veredito_2 = check_condition_two(coeffs, n_theta=params.n_theta)
    if veredito_2.satisfied:
        K = growth_rate_estimate(coeffs, n_theta=params.n_theta, max_nos=params.max_nos)
    else:
        K = GrowthRateEstimate(0.0, None, None, None, "none", False)

    if condicao_1:
        previsto = "stable"
    elif veredito_2.satisfied:
        previsto = "unstable"
    else:
        previsto = "inconclusive"

    holder = {}
    for i in sorted(ativos):
        if profile.is_compact:
            semi = holder_half_seminorm(profile, i)
            holder[str(i + 1)] = {"seminorma": semi.value, "K_escalar": semi.value / math.sqrt(2.0),
                                  "u0": semi.u0, "u1": semi.u1}

    add_notification(f"Classificação de '{system.label}': condição 1={condicao_1}, "
                     f"condição 2={veredito_2.satisfied}, K={K.K:.6g}, previsto={previsto}.")
    return {
        "system": system.label,
        "N": system.N,
        "active_components": [i + 1 for i in sorted(ativos)],
        "condition1": condicao_1,
        "condition1_violations": [[i + 1, j + 1, l + 1] for i, j, l in violacoes],
        "condition2": {
            "satisfied": veredito_2.satisfied,
            "u0": veredito_2.u0,
            "theta": veredito_2.theta,
            "eigenvalue": veredito_2.eigenvalue,
            "max_abs_real": veredito_2.value,
        },
        "K": K.K,
        "K_witness": K,
        "holder_half": holder,
        "predicted": previsto,
        "liouville_residual": liouville_residual(ren, couplings, profile),
        "renormalizer_det_range": [float(ren.det.min()), float(ren.det.max())],
    }


def executar_classify(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    veredito = classify(cenario)
    reports.escrever_json(destino / "classificacao.json", veredito)
    resumo = {"condition1": veredito["condition1"], "condition2": veredito["condition2"]["satisfied"],
              "K": veredito["K"], "predicted": veredito["predicted"]}
    return ["classificacao.json"], resumo


# --- Tarefa mode ---

def _malha(m: schemas.MalhaCaracteristica) -> GoursatGrid:
    return GoursatGrid(m.u_min, m.h_u, m.v_max, m.h_v)


def executar_mode(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    params = cenario.params
    _, _, _, _, coeffs = preparar(cenario)
    if params.components:
        coeffs = coeffs.restrict([k - 1 for k in params.components])
    previsto = growth_rate_estimate(coeffs, n_theta=params.n_theta, max_nos=params.max_nos)
    theta = params.theta if params.theta is not None else (previsto.theta or 0.0)
    frequencias = [(xi * math.cos(theta), xi * math.sin(theta)) for xi in params.xi]
    grid = _malha(params.grid)
    modos = solve_modes(coeffs, frequencias, grid, threads=threads)

    saidas, ajustes = [], []
    for n, (xi, modo) in enumerate(zip(params.xi, modos)):
        nome = f"modo_{n + 1:02d}.csv"
        reports.escrever_tabela_csv(destino / nome, pd.DataFrame({"t": modo.perfil.t, "log_sup_q": modo.perfil.log_max}))
        saidas.append(nome)
        ajuste = _ajuste_ou_erro(fit_sqrt_exponential, modo.perfil.t, log_y=modo.perfil.log_max, t_min=params.fit_t_min)
        registro = {"xi": xi, "xi_y": modo.xi_y, "xi_z": modo.xi_z, "fit": ajuste}
        if not isinstance(ajuste, dict):
            registro["K_fit"] = ajuste.exponent
            registro["dentro_da_cota_superior"] = bool(previsto.K > 0 and ajuste.exponent <= 10.0 * previsto.K)
        ajustes.append(registro)

    energia = None
    if params.energy_check and coeffs.is_zero():
        energia = goursat_solve(coeffs, frequencias[0][0], frequencias[0][1], grid, balanco_energia=True).residuo_energia

    reports.escrever_json(destino / "ajuste.json", {"K_predicted": previsto, "theta": theta, "modes": ajustes,
                                                    "energy_residual": energia})
    saidas.append("ajuste.json")
    resumo = {"K_predicted": previsto.K, "theta": theta,
              "K_fit": [a.get("K_fit") for a in ajustes]}
    return saidas, resumo


# --- Tarefa fdtd ---

def _crescimento_maximo(t: np.ndarray, energia: np.ndarray) -> float:
    """Maior aumento relativo por unidade de tempo entre registros consecutivos."""
    if energia.size < 2:
        return 0.0
    base = np.maximum(np.abs(energia[:-1]), 1e-300)
    return float(np.max(np.diff(energia) / (base * np.diff(t))))


def executar_fdtd(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    params = cenario.params
    system, profile, _, ren, coeffs = preparar(cenario)
    grid = GridSpec(params.L, params.grid_h, params.t_max, params.cfl, params.periodic_yz, params.n_y, params.n_z)
    usar_ren = params.renormalize
    resultado = evolve(system, profile, grid, params.eps, [k - 1 for k in params.components],
                       dados=params.data, k_y=params.k_y, linear=params.linear, dt_out=params.dt_out,
                       ren=ren if usar_ren else None, coeffs=coeffs if usar_ren else None,
                       delta=params.delta, ordem_normas=params.norm_order, threads=threads)
    ledger = resultado.ledger
    reports.escrever_tabela_csv(destino / "registro.csv", ledger.linhas)
    saidas = ["registro.csv"]

    t = ledger.coluna("t")
    resumo = {"passos": grid.n_passos, "dt": grid.dt, "t_final": resultado.final.t,
              "sup_dpsi_final": float(ledger.coluna("sup_dpsi")[-1])}
    ajuste = _ajuste_ou_erro(fit_power_decay, t, ledger.coluna("sup_dpsi"), t_min=params.fit_t_min)
    relatorio = {"grid": {"L": grid.L, "h": grid.h, "shape": grid.shape, "dt": grid.dt, "n_passos": grid.n_passos},
                 "sup_dpsi_fit": ajuste,
                 "support_leak": support_leak(resultado.final, grid, 12 * grid.h)}
    if usar_ren:
        gama = ledger.coluna("energia_gama")
        relatorio["energia_gama_crescimento"] = float(gama[-1] / gama[0] - 1.0) if gama[0] > 0 else None
        mult = ledger.coluna("energia_multiplicador")
        crescimento = _crescimento_maximo(t, mult)
        relatorio["multiplicador_crescimento_max"] = crescimento
        relatorio["multiplicador_nao_crescente"] = bool(crescimento <= FOLGA_MULTIPLICADOR)
        resumo["multiplicador_nao_crescente"] = relatorio["multiplicador_nao_crescente"]
    if not isinstance(ajuste, dict):
        resumo["expoente_sup_dpsi"] = ajuste.exponent
    reports.escrever_json(destino / "fdtd.json", relatorio)
    saidas.append("fdtd.json")

    if params.snapshot:
        final = resultado.final
        binario, lateral = reports.escrever_snapshot(
            destino, "psi_final", final.psi, (grid.h, grid.h, grid.h),
            (float(grid.x[0]), float(grid.y[0]), float(grid.z[0])), final.t,
            [f"psi_{i + 1}" for i in range(final.N)])
        saidas += [binario.name, lateral.name]
    return saidas, resumo


# --- Tarefa geoptics ---

def executar_geoptics(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    params = cenario.params
    _, _, _, _, coeffs = preparar(cenario)
    direcao = null_vector(params.u_1, params.u_2, params.T)
    mu = params.mu or frequencia_padrao(params.T)
    bundle = RayBundle.construir(direcao, mu, params.M, n_s=params.n_s)
    solucao = transport_solve(coeffs, bundle, params.M, largura=params.largura or math.inf, mu=mu)

    linhas = []
    u_linha = bundle.u_linha(bundle.s, 0.0)
    centrais = [solucao.raio_central(j) for j in range(params.M + 1)]
    ansatz = np.linalg.norm(solucao.ansatz_central(), axis=1)
    for k, s in enumerate(bundle.s):
        linha = {"t": s, "u_linha": u_linha[k], "abs_ansatz": ansatz[k]}
        for j, phi in enumerate(centrais):
            for i in range(phi.shape[1]):
                linha[f"re_phi{j}_{i + 1}"] = phi[k, i].real
                linha[f"im_phi{j}_{i + 1}"] = phi[k, i].imag
        linhas.append(linha)
    reports.escrever_tabela_csv(destino / "raio_central.csv", linhas)

    ode = ComparisonODE.de_coeficientes(coeffs, direcao)
    crescimento = solucao.crescimento()
    log_observado = float(np.log(crescimento.max() / crescimento[0])) if crescimento[0] > 0 else None
    relatorio = {
        "L": direcao.L,
        "L_bar": direcao.L_bar,
        "minkowski_norm": direcao.minkowski_norm,
        "transversalidade": direcao.transversalidade,
        "mu": mu,
        "M": params.M,
        "raios": int(bundle.a.size * bundle.b.size * bundle.c.size),
        "espacamento": bundle.espacamento,
        "ansatz_residual": ansatz_residual(solucao, coeffs),
        "transport_defect": transport_defect(solucao, coeffs),
        "log_crescimento_observado": log_observado,
        "log_crescimento_previsto": math.sqrt(direcao.kappa * direcao.T / 2.0) * integral_abscissa(ode),
    }
    if params.comparison and params.T >= 1e3:
        relatorio["comparison"] = comparison_ode_check(ode, amostras=params.comparison_samples,
                                                       seed=cenario.seed, eps=params.comparison_eps)
    else:
        relatorio["comparison"] = None
    reports.escrever_json(destino / "geoptics.json", relatorio)
    resumo = {"mu": mu, "ansatz_residual": relatorio["ansatz_residual"],
              "log_crescimento_observado": log_observado,
              "log_crescimento_previsto": relatorio["log_crescimento_previsto"]}
    if relatorio["comparison"] is not None:
        resumo["comparison"] = relatorio["comparison"].status
    return ["raio_central.csv", "geoptics.json"], resumo


# --- Tarefa geometry ---

def executar_geometry(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    params = cenario.params
    profile = construir_perfil(cenario)

    volumes = []
    for t in params.t_list:
        est = region_volume(t, samples=params.samples, seed=cenario.seed)
        volumes.append({"t": t, "volume": est.value, "erro_padrao": est.stderr,
                        "exato": region_volume_exact(t), "cota": LIMITE_VOLUME * t,
                        "dentro_da_cota": bool(est.value <= LIMITE_VOLUME * t)})
    reports.escrever_tabela_csv(destino / "volumes.csv", volumes)

    calotas = []
    for deslocamento in params.cap_offsets:
        valores = [t * sphere_cap_measure(t, t + deslocamento) for t in params.cap_t_list]
        positivos = [v for v in valores if v > 0]
        calotas.append({"r_menos_t": deslocamento, "t_sigma": valores,
                        "razao_max_min": max(positivos) / min(positivos) if positivos else None})

    pesos = [weight_growth_check(profile, params.weight_component - 1, k, params.weight_t_list,
                                 samples=params.weight_samples, seed=cenario.seed)
             for k in params.weight_k]
    relatorio = {"volumes": volumes, "calotas": {"t": params.cap_t_list, "linhas": calotas}, "pesos": pesos}
    reports.escrever_json(destino / "geometria.json", relatorio)
    razoes = [c["razao_max_min"] for c in calotas if c["razao_max_min"] is not None]
    resumo = {"volumes_dentro_da_cota": all(v["dentro_da_cota"] for v in volumes),
              "razao_calotas_max": max(razoes) if razoes else None,
              "pesos_dentro_do_limite": all(p["dentro_do_limite"] for p in pesos)}
    return ["volumes.csv", "geometria.json"], resumo


# --- Tarefa blowup ---

def executar_blowup(cenario, destino: Path, threads: int = 1) -> tuple[list[str], dict]:
    params = cenario.params
    _, _, _, _, coeffs = preparar(cenario)
    escalar = coeffs.restrict([params.component - 1])
    previsto = growth_rate_estimate(escalar, n_theta=params.n_theta, max_nos=params.max_nos)
    varredura = nirenberg_blowup_scan(escalar, params.xi, params.deltas, _malha(params.grid))
    reports.escrever_tabela_csv(destino / "explosao.csv",
                                [{"delta": d, "T_blow": T if T is not None else math.nan} for d, T in varredura.entries])

    explodiram = sum(T is not None for _, T in varredura.entries)
    ajuste = _ajuste_ou_erro(varredura.ajuste) if explodiram >= 2 else {"erro": "menos de dois valores de delta explodiram"}
    relatorio = {"xi": params.xi, "K_predicted": previsto, "entries": varredura.entries, "fit": ajuste}
    if not isinstance(ajuste, dict) and previsto.K > 0:
        relatorio["inclinacao_vezes_K"] = ajuste.exponent * previsto.K
    reports.escrever_json(destino / "explosao.json", relatorio)
    resumo = {"K_predicted": previsto.K, "explodiram": explodiram,
              "r2": None if isinstance(ajuste, dict) else ajuste.r2,
              "inclinacao_vezes_K": relatorio.get("inclinacao_vezes_K")}
    return ["explosao.csv", "explosao.json"], resumo


TAREFAS = {
    "classify": executar_classify,
    "mode": executar_mode,
    "fdtd": executar_fdtd,
    "geoptics": executar_geoptics,
    "geometry": executar_geometry,
    "blowup": executar_blowup,
}
