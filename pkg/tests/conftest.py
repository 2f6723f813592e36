from hypothesis import settings

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for kind in ("passed", "failed"):
        for rep in terminalreporter.stats.get(kind, []):
            if rep.when != "call":
                continue
            for key, value in rep.user_properties:
                if key == "acceptance":
                    lines.append(value)
    if not lines:
        return
    lines.sort(key=lambda s: int(s.split()[1].rstrip(":")))
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
