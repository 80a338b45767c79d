from codedcache import adaptive, cli, verify


def test_fault_injection_fails_decode_checks():
    assert not verify.two_user_example(fault_inject=True)[0]
    assert not verify.multiaccess_checks(fault_inject=True)[0]
    assert not verify.decentralized_convergence(fault_inject=True, n_seeds=1, file_size=2000)[0]


def test_irregular_model_is_skipped_with_warning():
    model = adaptive.ClusterModel(16, 16, 4, 0.25, 0.1)
    ok, detail = verify.adaptive_bounds(n_trials=2, model=model)
    assert ok is None and detail.startswith("WARNING")


def test_verify_subcommand_single_criterion(capsys):
    assert cli.main(["verify", "--only", "3"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]  3" in out and "1/1 criteria passed" in out
    assert cli.main(["verify", "--only", "2", "--fault-inject"]) == 1
