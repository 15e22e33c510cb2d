# nullwave/tests/test_cli_io.py
import json
import math
from pathlib import Path

import numpy as np
import pytest

import crud
import main_app
import reports
import routes
from exceptions import ConfigValidationError, NumericalFailure, ResolutionError


def _cenario_classify(sistema="example2", **extra):
    cenario = {
        "task": "classify",
        "system": sistema,
        "profile": {"amplitudes": [0.0, 1.0]},
        "params": {"h": 1e-2, "n_theta": 8, "max_nos": 50},
    }
    cenario.update(extra)
    return cenario


def test_validacao_junta_todos_os_erros():
    """Um cenário com vários problemas devolve todos de uma vez."""
    cenario = _cenario_classify(profile={"amplitudes": [1.0, 0.0], "shape": "triangulo"})
    cenario["params"] = {"h": 0.5, "n_theta": 0, "extra": 1}
    with pytest.raises(ConfigValidationError) as erro:
        main_app.carregar_cenario(cenario)
    assert erro.value.exit_code == 2
    assert len(erro.value.erros) >= 3
    assert any("shape" in e for e in erro.value.erros)


def test_validacao_de_componentes_e_amplitudes():
    # 1. amplitudes não batem com N = 2
    with pytest.raises(ConfigValidationError):
        main_app.carregar_cenario(_cenario_classify(profile={"amplitudes": [1.0]}))

    # 2. componente fora de 1..N
    cenario = {"task": "blowup", "system": "example2", "profile": {"amplitudes": [0.0, 1.0]},
               "params": {"component": 3}}
    with pytest.raises(ConfigValidationError):
        main_app.carregar_cenario(cenario)

    # 3. tarefa desconhecida
    with pytest.raises(ConfigValidationError):
        main_app.carregar_cenario(_cenario_classify(task="animacao"))


def test_sistema_por_documento():
    eta = np.diag([-1.0, 1.0, 1.0, 1.0]).ravel().tolist()
    cenario = main_app.carregar_cenario(_cenario_classify(
        sistema={"N": 1, "forms": [{"i": 1, "j": 1, "l": 1, "matrix": eta}]},
        profile={"amplitudes": [1.0]},
    ))
    assert cenario.N == 1

    with pytest.raises(ConfigValidationError):
        main_app.carregar_cenario(_cenario_classify(
            sistema={"N": 1, "forms": [{"i": 1, "j": 2, "l": 1, "matrix": eta}]},
            profile={"amplitudes": [1.0]},
        ))


def test_hash_ignora_o_diretorio_de_saida():
    a = main_app.carregar_cenario(_cenario_classify(output_dir="/tmp/a"))
    b = main_app.carregar_cenario(_cenario_classify(output_dir="/tmp/b"))
    c = main_app.carregar_cenario(_cenario_classify(seed=1))
    assert main_app.hash_configuracao(a) == main_app.hash_configuracao(b)
    assert main_app.hash_configuracao(a) != main_app.hash_configuracao(c)
    assert len(main_app.hash_configuracao(a)) == 64


def test_classificacao_dos_exemplos(tmp_path, db_session):
    """Exemplo 2 é instável; exemplo 1 é estável."""
    # 1. Exemplo 2
    manifesto = main_app.run_scenario(_cenario_classify("example2"), out=tmp_path, db=db_session)
    pasta = Path(manifesto.output_dir)
    assert pasta.is_dir() and pasta.name.startswith(f"classify-{manifesto.config_hash[:12]}-")
    for nome in ("classificacao.json", "manifest.json", "relatorio.pdf"):
        assert (pasta / nome).is_file()
    veredito = json.loads((pasta / "classificacao.json").read_text(encoding="utf-8"))
    assert veredito["predicted"] == "unstable"
    assert veredito["condition1"] is False
    assert [1, 2, 1] in veredito["condition1_violations"]
    assert veredito["condition2"]["satisfied"] is True
    assert veredito["K"] > 0.0

    # 2. Exemplo 1
    manifesto = main_app.run_scenario(_cenario_classify("example1"), out=tmp_path, db=db_session)
    pasta = Path(manifesto.output_dir)
    veredito = json.loads((pasta / "classificacao.json").read_text(encoding="utf-8"))
    assert veredito["predicted"] == "stable"

    # 3. Manifesto e registro
    dados = json.loads((pasta / "manifest.json").read_text(encoding="utf-8"))
    assert dados["task"] == "classify" and dados["tool_version"] == main_app.__version__
    assert "classificacao.json" in dados["outputs"]
    assert len(crud.listar_execucoes(db_session)) == 2
    # nenhum diretório temporário sobra
    assert not list(tmp_path.glob(".tmp-*"))
    print("\n Teste de Classificação pela CLI: OK")


def test_tarefa_errada_e_recusada(tmp_path, db_session):
    with pytest.raises(ConfigValidationError):
        main_app.run_scenario(_cenario_classify(), out=tmp_path, tarefa="mode", db=db_session)


def test_falha_numerica_grava_arquivo_de_falha(tmp_path, db_session):
    """Malha grossa demais para xi: sobra só o falha-<hash>-<instante>.json."""
    cenario = {
        "task": "mode",
        "system": "example2",
        "profile": {"amplitudes": [0.0, 1.0]},
        "params": {"h": 1e-2, "n_theta": 8, "max_nos": 50, "xi": [10.0], "theta": 0.0,
                   "grid": {"h_u": 0.01, "v_max": 21.0, "h_v": 0.5}},
    }
    with pytest.raises(ResolutionError):
        main_app.run_scenario(cenario, out=tmp_path, db=db_session)
    falhas = list(tmp_path.glob("falha-*.json"))
    assert len(falhas) == 1
    dados = json.loads(falhas[0].read_text(encoding="utf-8"))
    assert dados["erro"] == "ResolutionError"
    assert not list(tmp_path.glob("mode-*"))
    execucao = crud.listar_execucoes(db_session)[0]
    assert execucao.status == "falha"


def _tarefa_singular(cenario, destino, threads=1):
    np.linalg.inv(np.zeros((2, 2)))


def test_erro_de_algebra_linear_vira_falha_numerica(tmp_path, db_session, monkeypatch):
    """LinAlgError dentro da tarefa segue o mesmo caminho das falhas numéricas."""
    monkeypatch.setitem(routes.TAREFAS, "classify", _tarefa_singular)
    with pytest.raises(NumericalFailure) as erro:
        main_app.run_scenario(_cenario_classify(), out=tmp_path, db=db_session)
    assert erro.value.exit_code == 3
    assert isinstance(erro.value.__cause__, np.linalg.LinAlgError)

    falhas = list(tmp_path.glob("falha-*.json"))
    assert len(falhas) == 1
    dados = json.loads(falhas[0].read_text(encoding="utf-8"))
    assert dados["erro"] == "NumericalFailure"
    assert dados["diagnostico"]["excecao"] == "LinAlgError"
    assert not list(tmp_path.glob(".tmp-*"))
    assert crud.listar_execucoes(db_session)[0].status == "falha"


def test_cli_sai_com_codigo_3_em_falha_numerica(runner, tmp_path, monkeypatch):
    monkeypatch.setitem(routes.TAREFAS, "classify", _tarefa_singular)
    config = tmp_path / "cenario.json"
    config.write_text(json.dumps(_cenario_classify()), encoding="utf-8")
    resultado = runner.invoke(main_app.cli, ["classify", "--config", str(config), "--out", str(tmp_path / "runs")])
    assert resultado.exit_code == 3
    assert list((tmp_path / "runs").glob("falha-*.json"))


def test_cli_classify_e_history(runner, tmp_path):
    config = tmp_path / "cenario.json"
    config.write_text(json.dumps(_cenario_classify()), encoding="utf-8")
    saida = tmp_path / "runs"

    # 1. Executa pela CLI
    resultado = runner.invoke(main_app.cli, ["classify", "--config", str(config), "--out", str(saida)])
    assert resultado.exit_code == 0, resultado.output
    assert "classify-" in resultado.output

    # 2. O histórico lista a execução
    resultado = runner.invoke(main_app.cli, ["history", "--out", str(saida)])
    assert resultado.exit_code == 0
    assert "classify" in resultado.output and "ok" in resultado.output


def test_cli_config_invalida_sai_com_codigo_2(runner, tmp_path):
    config = tmp_path / "ruim.json"
    config.write_text(json.dumps(_cenario_classify(profile={"amplitudes": [1.0]})), encoding="utf-8")
    resultado = runner.invoke(main_app.cli, ["classify", "--config", str(config), "--out", str(tmp_path)])
    assert resultado.exit_code == 2

    config.write_text("{ isto não é json", encoding="utf-8")
    resultado = runner.invoke(main_app.cli, ["classify", "--config", str(config), "--out", str(tmp_path)])
    assert resultado.exit_code == 2


def test_cli_usa_a_variavel_de_ambiente(runner, tmp_path, raiz_saida):
    config = tmp_path / "cenario.json"
    config.write_text(json.dumps(_cenario_classify()), encoding="utf-8")
    resultado = runner.invoke(main_app.cli, ["classify", "--config", str(config)])
    assert resultado.exit_code == 0, resultado.output
    assert list(raiz_saida.glob("classify-*"))
    assert (raiz_saida / "registro.db").is_file()


def test_para_json_converte_tipos_numericos():
    dados = {"a": np.float64(math.nan), "b": 1 + 2j, "c": np.arange(3), "d": (np.bool_(True), math.inf)}
    assert reports.para_json(dados) == {"a": None, "b": {"re": 1.0, "im": 2.0}, "c": [0, 1, 2], "d": [True, None]}


def test_snapshot_ida_e_volta(tmp_path):
    valores = np.arange(24, dtype=float).reshape(2, 3, 4)
    binario, lateral = reports.escrever_snapshot(tmp_path, "psi", valores, (0.5, 0.5, 0.5),
                                                 (-1.0, -1.0, -1.0), 2.0, ["psi_1", "psi_2"])
    assert binario.stat().st_size == 24 * 8
    lidos, meta = reports.ler_snapshot(binario)
    np.testing.assert_array_equal(lidos, valores)
    assert meta["dims"] == [2, 3, 4] and meta["endianness"] == "little"
    assert lateral.name == "psi.json"


def test_relatorio_pdf_identifica_a_execucao(tmp_path):
    pdf = reports.PDF("fdtd", "ab" * 32, "0.1.0")
    assert pdf.rotulo() == "nullwave v0.1.0 | tarefa fdtd | config abababababab"

    caminho = reports.gerar_resumo_pdf(tmp_path / "relatorio.pdf", "fdtd", "ab" * 32,
                                       {"dt": 0.125, "passos": 160}, ["[10:00:00] evento"], versao="0.1.0")
    assert caminho.read_bytes().startswith(b"%PDF")
