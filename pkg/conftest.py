import os
import tempfile

# Логи тестов пишутся во временный каталог (до импорта модулей src)
os.environ.setdefault("FLEXBEE_LOG_DIR", os.path.join(tempfile.gettempdir(), "flexbee-test-logs"))
