import os
from dotenv import load_dotenv

# Загрузка переменных из .env
load_dotenv()

# Каталог для результатов (единственное переопределение через окружение)
FLEXBEE_OUTPUT_DIR = os.getenv("FLEXBEE_OUTPUT_DIR", "")

# Каталог для логов (на результаты не влияет)
FLEXBEE_LOG_DIR = os.getenv("FLEXBEE_LOG_DIR", "logging")
